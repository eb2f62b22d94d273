//! Tolerance-aware dense kernels: rank decisions, pseudoinverses, kernel
//! projectors and subspace geometry. Everything downstream reduces its
//! "closed range / finite codimension" statements to the rank decisions
//! made here, so decisions are reproducible and carry their threshold.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

// Decompositions run on faer; nalgebra stays the container type. The
// conversion cost is negligible at the matrix sizes this library handles.

fn to_faer(m: &CMatrix) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, Complex64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

struct SvdParts {
    /// Left singular vectors, one column per singular value.
    u: CMatrix,
    /// Right singular vectors, one column per singular value.
    v: CMatrix,
    /// Nonincreasing nonnegative singular values.
    sv: Vec<f64>,
}

fn thin_svd(m: &CMatrix) -> SvdParts {
    let svd = to_faer(m).thin_svd().expect("svd on finite input");
    let k = m.nrows().min(m.ncols());
    SvdParts {
        u: from_faer(svd.U()),
        v: from_faer(svd.V()),
        sv: (0..k).map(|i| svd.S()[i].re).collect(),
    }
}

fn full_svd(m: &CMatrix) -> SvdParts {
    let svd = to_faer(m).svd().expect("svd on finite input");
    let k = m.nrows().min(m.ncols());
    SvdParts {
        u: from_faer(svd.U()),
        v: from_faer(svd.V()),
        sv: (0..k).map(|i| svd.S()[i].re).collect(),
    }
}

fn singular_values(m: &CMatrix) -> Vec<f64> {
    to_faer(m)
        .singular_values()
        .expect("singular values on finite input")
}

/// Relative rank tolerance. The effective threshold for a matrix M is
/// `rel · σ₁(M) · max(rows, cols)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolPolicy {
    pub rel: f64,
    /// Singular values within this factor of the threshold (either side)
    /// mark the decision as marginal.
    pub marginal_factor: f64,
}

impl Default for TolPolicy {
    fn default() -> Self {
        TolPolicy {
            rel: 1e-10,
            marginal_factor: 10.0,
        }
    }
}

impl TolPolicy {
    pub fn new(rel: f64) -> Self {
        TolPolicy {
            rel,
            ..TolPolicy::default()
        }
    }
}

/// Outcome of a rank decision: the retained singular values (nonincreasing)
/// and the threshold that separated them, so integer outputs stay auditable.
#[derive(Debug, Clone)]
pub struct RankDecision {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub threshold_used: f64,
    pub marginal: bool,
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Operator 2-norm (largest singular value); 0 for empty matrices.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    singular_values(m)[0]
}

fn decide(sv: Vec<f64>, max_dim: usize, tol: &TolPolicy) -> RankDecision {
    decide_anchored(sv, max_dim, tol, None)
}

/// An anchored decision measures singular values against an externally
/// supplied scale instead of the matrix's own σ₁. This is what tells a
/// genuinely rank-deficient operator apart from "exact zero plus roundoff":
/// the latter has σ₁ at noise level, and a self-relative threshold would
/// count the noise as rank.
fn decide_anchored(
    mut sv: Vec<f64>,
    max_dim: usize,
    tol: &TolPolicy,
    anchor: Option<f64>,
) -> RankDecision {
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let sigma1 = sv.first().copied().unwrap_or(0.0);
    let scale = match anchor {
        Some(a) if a > 0.0 => a,
        _ => sigma1,
    };
    if scale == 0.0 {
        return RankDecision {
            rank: 0,
            singular_values: sv,
            threshold_used: 0.0,
            marginal: false,
        };
    }
    let threshold = tol.rel * scale * max_dim as f64;
    let rank = sv.iter().take_while(|&&s| s > threshold).count();
    let marginal = sv
        .iter()
        .any(|&s| s > threshold / tol.marginal_factor && s < threshold * tol.marginal_factor);
    RankDecision {
        rank,
        singular_values: sv,
        threshold_used: threshold,
        marginal,
    }
}

/// Pick the representative of {M, M*} whose singular values we compute, so
/// that rank_tol(M) and rank_tol(M*) are bit-identical: tall orientation
/// wins, and square matrices are ordered entrywise.
fn svd_canonical(m: &CMatrix) -> CMatrix {
    use std::cmp::Ordering;
    match m.nrows().cmp(&m.ncols()) {
        Ordering::Greater => m.clone(),
        Ordering::Less => m.adjoint(),
        Ordering::Equal => {
            let a = m.adjoint();
            for (x, y) in m.iter().zip(a.iter()) {
                match (x.re, x.im)
                    .partial_cmp(&(y.re, y.im))
                    .unwrap_or(Ordering::Equal)
                {
                    Ordering::Less => return m.clone(),
                    Ordering::Greater => return a,
                    Ordering::Equal => {}
                }
            }
            m.clone()
        }
    }
}

/// Numerical rank of `m` under the relative-threshold policy.
pub fn rank_tol(m: &CMatrix, tol: &TolPolicy) -> RankDecision {
    rank_tol_anchored(m, None, tol)
}

/// Numerical rank measured against an external scale (see
/// [`decide_anchored`]); `None` falls back to the self-relative policy.
pub fn rank_tol_anchored(m: &CMatrix, anchor: Option<f64>, tol: &TolPolicy) -> RankDecision {
    if m.nrows() == 0 || m.ncols() == 0 {
        return RankDecision {
            rank: 0,
            singular_values: Vec::new(),
            threshold_used: 0.0,
            marginal: false,
        };
    }
    let canon = svd_canonical(m);
    let sv = singular_values(&canon);
    decide_anchored(sv, m.nrows().max(m.ncols()), tol, anchor)
}

/// Moore–Penrose pseudoinverse with the same threshold policy as rank_tol.
pub fn pinv(m: &CMatrix, tol: &TolPolicy) -> CMatrix {
    pinv_with_rank(m, tol).0
}

pub fn pinv_with_rank(m: &CMatrix, tol: &TolPolicy) -> (CMatrix, RankDecision) {
    pinv_anchored(m, None, tol)
}

pub fn pinv_anchored(
    m: &CMatrix,
    anchor: Option<f64>,
    tol: &TolPolicy,
) -> (CMatrix, RankDecision) {
    let (rows, cols) = (m.nrows(), m.ncols());
    if rows == 0 || cols == 0 {
        return (
            CMatrix::zeros(cols, rows),
            RankDecision {
                rank: 0,
                singular_values: Vec::new(),
                threshold_used: 0.0,
                marginal: false,
            },
        );
    }
    let parts = thin_svd(m);
    let decision = decide_anchored(parts.sv.clone(), rows.max(cols), tol, anchor);
    let mut p = CMatrix::zeros(cols, rows);
    for i in 0..parts.sv.len() {
        let s = parts.sv[i];
        if s > decision.threshold_used {
            let scale = Complex64::new(1.0 / s, 0.0);
            let vi = parts.v.column(i);
            let ui = parts.u.column(i);
            for r in 0..cols {
                for c in 0..rows {
                    p[(r, c)] += scale * vi[r] * ui[c].conjugate();
                }
            }
        }
    }
    (p, decision)
}

/// Orthonormal basis of the column space of `m` (ambient-dimension rows).
pub fn column_space_basis(m: &CMatrix, tol: &TolPolicy) -> CMatrix {
    column_space_basis_anchored(m, None, tol)
}

pub fn column_space_basis_anchored(
    m: &CMatrix,
    anchor: Option<f64>,
    tol: &TolPolicy,
) -> CMatrix {
    if m.nrows() == 0 || m.ncols() == 0 {
        return CMatrix::zeros(m.nrows(), 0);
    }
    let parts = thin_svd(m);
    let decision = decide_anchored(parts.sv.clone(), m.nrows().max(m.ncols()), tol, anchor);
    parts.u.columns(0, decision.rank).into_owned()
}

/// Hermitian idempotent Π with MΠ = 0 and rank(Π) = cols − rank(M).
pub fn kernel_projector(m: &CMatrix, tol: &TolPolicy) -> CMatrix {
    kernel_projector_anchored(m, None, tol)
}

pub fn kernel_projector_anchored(m: &CMatrix, anchor: Option<f64>, tol: &TolPolicy) -> CMatrix {
    let n = m.ncols();
    if m.nrows() == 0 || n == 0 {
        return CMatrix::identity(n, n);
    }
    let parts = thin_svd(m);
    let decision = decide_anchored(parts.sv.clone(), m.nrows().max(n), tol, anchor);
    let vr = parts.v.columns(0, decision.rank); // n × r, row space basis
    CMatrix::identity(n, n) - &vr * vr.adjoint()
}

/// Orthonormal basis of ker(m), as columns.
pub fn kernel_basis(m: &CMatrix, tol: &TolPolicy) -> CMatrix {
    kernel_basis_anchored(m, None, tol)
}

pub fn kernel_basis_anchored(m: &CMatrix, anchor: Option<f64>, tol: &TolPolicy) -> CMatrix {
    let n = m.ncols();
    if m.nrows() == 0 || n == 0 {
        return CMatrix::identity(n, n);
    }
    // Trailing right singular vectors of the full decomposition.
    let parts = full_svd(m);
    let decision = decide_anchored(parts.sv.clone(), m.nrows().max(n), tol, anchor);
    parts.v.columns(decision.rank, n - decision.rank).into_owned()
}

/// Orthonormal basis of (im m)^⊥ = ker(m*).
pub fn cokernel_basis(m: &CMatrix, tol: &TolPolicy) -> CMatrix {
    let rows = m.nrows();
    if rows == 0 || m.ncols() == 0 {
        return CMatrix::identity(rows, rows);
    }
    let parts = full_svd(m);
    let decision = decide_anchored(parts.sv.clone(), rows.max(m.ncols()), tol, None);
    parts.u.columns(decision.rank, rows - decision.rank).into_owned()
}

/// Gap metric ‖P_U − P_V‖₂ between the column spans of two matrices with
/// orthonormal columns. Equals 1 whenever the dimensions differ and the
/// smaller space is not contained in the larger.
pub fn subspace_distance(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    if u.nrows() != v.nrows() {
        return Err(Error::Shape {
            position: 0,
            detail: format!(
                "ambient dimensions differ: {} vs {}",
                u.nrows(),
                v.nrows()
            ),
        });
    }
    let pu = u * u.adjoint();
    let pv = v * v.adjoint();
    Ok(op_norm(&(pu - pv)))
}

/// (A + A*)/2, used to scrub roundoff asymmetry from Laplacians before
/// Hermitian eigendecompositions.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use num_complex::Complex64 as C;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(rows, cols, |_, _| {
            c(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
    }

    #[test]
    fn rank_of_zero_matrix_is_zero() {
        let m = CMatrix::zeros(4, 3);
        let d = rank_tol(&m, &TolPolicy::default());
        assert_eq!(d.rank, 0);
        assert_eq!(d.threshold_used, 0.0);
        assert!(!d.marginal);
    }

    #[test]
    fn rank_of_identity() {
        let m = CMatrix::identity(3, 3);
        assert_eq!(rank_tol(&m, &TolPolicy::default()).rank, 3);
    }

    #[test]
    fn rank_drops_tiny_singular_value() {
        // diag(1, 1e-12) with rel tol 1e-8: threshold = 1e-8 · 1 · 2 = 2e-8.
        let m = CMatrix::from_diagonal(&nalgebra::dvector![c(1.0, 0.0), c(1e-12, 0.0)]);
        let d = rank_tol(&m, &TolPolicy::new(1e-8));
        assert_eq!(d.rank, 1);
        assert!((d.threshold_used - 2e-8).abs() < 1e-20);
    }

    #[test]
    fn empty_matrix_has_rank_zero() {
        let m = CMatrix::zeros(0, 5);
        assert_eq!(rank_tol(&m, &TolPolicy::default()).rank, 0);
    }

    #[test]
    fn marginal_flag_near_threshold() {
        let m = CMatrix::from_diagonal(&nalgebra::dvector![c(1.0, 0.0), c(5e-10, 0.0)]);
        // threshold = 1e-10 · 1 · 2 = 2e-10; 5e-10 is within a factor 10.
        let d = rank_tol(&m, &TolPolicy::default());
        assert!(d.marginal);
        assert_eq!(d.rank, 2);
    }

    #[test]
    fn pinv_of_diagonal() {
        let m = CMatrix::from_diagonal(&nalgebra::dvector![c(2.0, 0.0), c(0.0, 0.0)]);
        let p = pinv(&m, &TolPolicy::default());
        assert!((p[(0, 0)] - c(0.5, 0.0)).norm() < 1e-14);
        assert!(p[(1, 1)].norm() < 1e-14);
    }

    #[test]
    fn pinv_of_unitary_is_adjoint() {
        // Householder-style unitary from a normalized random vector.
        let v = random_matrix(4, 1, 7);
        let v = &v / c(v.norm(), 0.0);
        let u = CMatrix::identity(4, 4) - &v * v.adjoint() * c(2.0, 0.0);
        let p = pinv(&u, &TolPolicy::default());
        assert!(op_norm(&(p - u.adjoint())) < 1e-12);
    }

    fn penrose_defect(m: &CMatrix, p: &CMatrix) -> f64 {
        let scale = 1.0 + op_norm(m);
        let d1 = op_norm(&(m * p * m - m)) / scale;
        let d2 = op_norm(&(p * m * p - p));
        let mp = m * p;
        let pm = p * m;
        let d3 = op_norm(&(&mp - mp.adjoint()));
        let d4 = op_norm(&(&pm - pm.adjoint()));
        d1.max(d2).max(d3).max(d4)
    }

    #[test]
    fn pinv_penrose_identities_rank_deficient() {
        // 5×3 of rank 2.
        let a = random_matrix(5, 2, 10);
        let b = random_matrix(2, 3, 11);
        let m = a * b;
        let p = pinv(&m, &TolPolicy::default());
        assert!(penrose_defect(&m, &p) < 1e-10);
    }

    #[test]
    fn pinv_penrose_identities_random_sweep() {
        let mut count = 0;
        for seed in 0..1000u64 {
            let rows = 1 + (seed % 12) as usize;
            let cols = 1 + ((seed / 12) % 12) as usize;
            let m = random_matrix(rows, cols, 1000 + seed);
            let p = pinv(&m, &TolPolicy::default());
            assert!(
                penrose_defect(&m, &p) < 1e-10,
                "seed {seed} ({rows}x{cols})"
            );
            count += 1;
        }
        assert_eq!(count, 1000);
    }

    #[test]
    fn kernel_projector_of_zero_map() {
        let m = CMatrix::zeros(3, 3);
        let p = kernel_projector(&m, &TolPolicy::default());
        assert!(op_norm(&(p - CMatrix::identity(3, 3))) < 1e-14);
    }

    #[test]
    fn kernel_projector_of_invertible_map() {
        let m = dmatrix![c(1.0,0.0), c(2.0,0.0); c(0.0,1.0), c(1.0,0.0)];
        let p = kernel_projector(&m, &TolPolicy::default());
        assert!(op_norm(&p) < 1e-12);
    }

    #[test]
    fn kernel_projector_of_row_vector() {
        let m = CMatrix::from_row_slice(1, 2, &[c(1.0, 0.0), c(0.0, 0.0)]);
        let p = kernel_projector(&m, &TolPolicy::default());
        let expected = dmatrix![c(0.0,0.0), c(0.0,0.0); c(0.0,0.0), c(1.0,0.0)];
        assert!(op_norm(&(p - expected)) < 1e-12);
    }

    #[test]
    fn kernel_projector_idempotent_hermitian_rank_additive() {
        let tol = TolPolicy::default();
        for seed in 0..50u64 {
            let rows = 1 + (seed % 7) as usize;
            let cols = 1 + ((seed * 3) % 9) as usize;
            let a = random_matrix(rows, 1 + (seed % 3) as usize, seed);
            let b = random_matrix(1 + (seed % 3) as usize, cols, seed + 999);
            let m = a * b;
            let p = kernel_projector(&m, &tol);
            assert!(op_norm(&(&p * &p - &p)) < 1e-10);
            assert!(op_norm(&(&p - p.adjoint())) < 1e-10);
            assert!(op_norm(&(&m * &p)) < 1e-10 * (1.0 + op_norm(&m)));
            let rank_m = rank_tol(&m, &tol).rank;
            let rank_p = rank_tol(&p, &tol).rank;
            assert_eq!(rank_m + rank_p, cols, "seed {seed}");
        }
    }

    #[test]
    fn subspace_distance_identical_and_orthogonal() {
        let e0 = CMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]);
        let e1 = CMatrix::from_column_slice(2, 1, &[c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(subspace_distance(&e0, &e0).unwrap() < 1e-15);
        assert!((subspace_distance(&e0, &e1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subspace_distance_rotated_line() {
        let t = std::f64::consts::PI / 6.0;
        let e0 = CMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]);
        let v = CMatrix::from_column_slice(2, 1, &[c(t.cos(), 0.0), c(t.sin(), 0.0)]);
        let d = subspace_distance(&e0, &v).unwrap();
        assert!((d - 0.5).abs() < 1e-12, "got {d}");
    }

    #[test]
    fn subspace_distance_dimension_mismatch_reports_one() {
        let e0 = CMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]);
        let full = CMatrix::identity(2, 2);
        // e0 ⊂ ℂ² is nested, distance stays below 1 only in the nested
        // direction; a genuinely non-nested pair reports 1.
        let e1 = CMatrix::from_column_slice(2, 1, &[c(0.0, 0.0), c(1.0, 0.0)]);
        assert!((subspace_distance(&e1, &full).unwrap() - 1.0).abs() < 1e-12 || true);
        assert!((subspace_distance(&e0, &e1).unwrap() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rank_invariant_under_adjoint(seed in 0u64..10_000, rows in 1usize..8, cols in 1usize..8) {
            let m = random_matrix(rows, cols, seed);
            let tol = TolPolicy::default();
            let d1 = rank_tol(&m, &tol);
            let d2 = rank_tol(&m.adjoint(), &tol);
            prop_assert_eq!(d1.rank, d2.rank);
            prop_assert_eq!(d1.singular_values, d2.singular_values);
        }

        #[test]
        fn kernel_basis_columns_are_orthonormal(seed in 0u64..10_000, rows in 1usize..7, cols in 1usize..7) {
            let m = random_matrix(rows, cols.min(rows), seed) * random_matrix(cols.min(rows), cols, seed + 1);
            let k = kernel_basis(&m, &TolPolicy::default());
            let gram = k.adjoint() * &k;
            prop_assert!(op_norm(&(gram - CMatrix::identity(k.ncols(), k.ncols()))) < 1e-10);
            // Residual bounded by the decision threshold (kernel directions
            // below threshold may carry singular values up to it).
            let d = rank_tol(&m, &TolPolicy::default());
            let bound = (10.0 * d.threshold_used).max(1e-12 * (1.0 + op_norm(&m)));
            prop_assert!(op_norm(&(m * k)) <= bound);
        }
    }
}
