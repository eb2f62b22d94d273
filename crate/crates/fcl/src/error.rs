use thiserror::Error;

/// Errors shared across the library. Structural problems (wrong shapes,
/// broken invariants) are reported with the offending chain position so
/// batch runs can point at the failing operator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch at position {position}: {detail}")]
    Shape { position: usize, detail: String },

    #[error("composition A_{}·A_{} is not zero (relative defect {defect:.3e})", position + 1, position)]
    NotAComplex { position: usize, defect: f64 },

    #[error("commuting square at position {position} violated (defect {defect:.3e})")]
    CommutingSquares { position: usize, defect: f64 },

    #[error(
        "cohomology routes disagree at position {position}: laplacian kernel {via_laplacian}, rank-nullity {via_rank}"
    )]
    CohomologyMismatch {
        position: usize,
        via_laplacian: usize,
        via_rank: usize,
    },

    #[error("laplacian-singular: pseudo-inversion at position {position} is rank-deficient beyond the harmonic space")]
    LaplacianSingular { position: usize },

    #[error("unstable-index: truncations N={n1} and N={n2} disagree ({detail})")]
    UnstableIndex { n1: usize, n2: usize, detail: String },

    #[error("symbol-vanishes: min |f| = {min_abs:.3e} below 1e-8 · max |f| = {max_abs:.3e}")]
    SymbolVanishes { min_abs: f64, max_abs: f64 },

    #[error("decay-violation: Re β = {re_beta:.3e} ≤ 0 on the cutoff support")]
    DecayViolation { re_beta: f64 },

    #[error("section-jump: adjacent-fiber gap {gap:.3e} at grid step {at} (grid too coarse)")]
    SectionJump { gap: f64, at: usize },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("non-finite entry in matrix input")]
    NonFinite,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
