//! Finite Hilbert-space complexes: validation, cohomology (computed two
//! independent ways and required to agree), Laplacians, Hodge parametrices,
//! correction of quasicomplexes into complexes, discrete deRham models and
//! grids of per-fiber complexes.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numlin::{
    ensure_finite, hermitize, kernel_projector_anchored, op_norm, pinv_anchored,
    rank_tol_anchored, CMatrix, TolPolicy,
};

/// Common scale for all rank decisions inside one complex: the largest
/// operator norm among the differentials. Anchoring at this scale keeps the
/// Laplacian route and the rank-nullity route consistent and stops
/// "exact zero plus roundoff" blocks from being counted as rank.
pub(crate) fn operator_scale(mats: &[CMatrix]) -> f64 {
    mats.iter().map(op_norm).fold(0.0, f64::max)
}

/// Relative tolerance for "this composition is zero".
pub const COMPOSE_TOL: f64 = 1e-10;

/// A finite complex 0 → H_0 → H_1 → … → H_{N+1} → 0 of complex matrices
/// A_j: H_j → H_{j+1} with A_{j+1} A_j = 0 up to [`COMPOSE_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteComplex {
    spaces: Vec<usize>,
    differentials: Vec<CMatrix>,
}

/// Per-position composition norms produced by [`FiniteComplex::validate`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub relative_composition_norms: Vec<f64>,
    pub max_relative_composition: f64,
    pub is_complex: bool,
}

/// Cohomology dimensions, harmonic projectors and the index.
#[derive(Debug, Clone)]
pub struct CohomologyReport {
    pub dims: Vec<usize>,
    pub harmonic_projectors: Vec<CMatrix>,
    pub index: i64,
    pub marginal: bool,
}

/// Hodge parametrix B_j = Δ_j⁺ A_j*: the remainders 1 − A_{j−1}B_{j−1} − B_jA_j
/// are the harmonic projectors, and B_j B_{j+1} = 0.
#[derive(Debug, Clone)]
pub struct Parametrix {
    pub operators: Vec<CMatrix>,
    pub remainders: Vec<CMatrix>,
}

/// Result of correcting a quasicomplex: how much each operator moved.
#[derive(Debug, Clone, Serialize)]
pub struct CorrectionLog {
    pub correction_norms: Vec<f64>,
    pub input_composition_norms: Vec<f64>,
    pub marginal: bool,
}

impl FiniteComplex {
    /// `spaces` lists the graded dimensions n_0..n_{N+1}; `differentials[j]`
    /// must be an n_{j+1} × n_j matrix.
    pub fn new(spaces: Vec<usize>, differentials: Vec<CMatrix>) -> Result<Self> {
        if spaces.is_empty() {
            return Err(Error::Shape {
                position: 0,
                detail: "a complex needs at least one space".into(),
            });
        }
        if differentials.len() + 1 != spaces.len() {
            return Err(Error::Shape {
                position: 0,
                detail: format!(
                    "{} spaces need {} differentials, got {}",
                    spaces.len(),
                    spaces.len() - 1,
                    differentials.len()
                ),
            });
        }
        for (j, a) in differentials.iter().enumerate() {
            if a.nrows() != spaces[j + 1] || a.ncols() != spaces[j] {
                return Err(Error::Shape {
                    position: j,
                    detail: format!(
                        "A_{j} is {}×{}, expected {}×{}",
                        a.nrows(),
                        a.ncols(),
                        spaces[j + 1],
                        spaces[j]
                    ),
                });
            }
            ensure_finite(a)?;
        }
        Ok(FiniteComplex {
            spaces,
            differentials,
        })
    }

    /// Zero complex on the given graded dimensions.
    pub fn zero(spaces: Vec<usize>) -> Self {
        let differentials = (0..spaces.len().saturating_sub(1))
            .map(|j| CMatrix::zeros(spaces[j + 1], spaces[j]))
            .collect();
        FiniteComplex {
            spaces,
            differentials,
        }
    }

    pub fn spaces(&self) -> &[usize] {
        &self.spaces
    }

    pub fn differentials(&self) -> &[CMatrix] {
        &self.differentials
    }

    pub fn positions(&self) -> usize {
        self.spaces.len()
    }

    /// A_j, or a correctly-shaped zero matrix when j is off either end.
    pub fn differential_or_zero(&self, j: isize) -> CMatrix {
        if j >= 0 && (j as usize) < self.differentials.len() {
            self.differentials[j as usize].clone()
        } else if j == -1 {
            CMatrix::zeros(self.spaces[0], 0)
        } else {
            CMatrix::zeros(0, *self.spaces.last().unwrap())
        }
    }

    /// Maximal relative composition norm ‖A_{j+1}A_j‖ / (1 + ‖A_{j+1}‖‖A_j‖).
    pub fn validate(&self) -> ValidationReport {
        let mut norms = Vec::new();
        for j in 0..self.differentials.len().saturating_sub(1) {
            let hi = &self.differentials[j + 1];
            let lo = &self.differentials[j];
            let scale = 1.0 + op_norm(hi) * op_norm(lo);
            norms.push(op_norm(&(hi * lo)) / scale);
        }
        let max = norms.iter().copied().fold(0.0, f64::max);
        ValidationReport {
            relative_composition_norms: norms,
            max_relative_composition: max,
            is_complex: max <= COMPOSE_TOL,
        }
    }

    pub fn require_complex(&self) -> Result<()> {
        let report = self.validate();
        match report
            .relative_composition_norms
            .iter()
            .position(|&n| n > COMPOSE_TOL)
        {
            None => Ok(()),
            Some(j) => Err(Error::NotAComplex {
                position: j,
                defect: report.relative_composition_norms[j],
            }),
        }
    }

    /// Δ_j = A_{j−1}A_{j−1}* + A_j*A_j for every position j.
    pub fn laplacians(&self) -> Vec<CMatrix> {
        (0..self.positions())
            .map(|j| {
                let mut delta = CMatrix::zeros(self.spaces[j], self.spaces[j]);
                if j > 0 {
                    let a = &self.differentials[j - 1];
                    delta += a * a.adjoint();
                }
                if j < self.differentials.len() {
                    let a = &self.differentials[j];
                    delta += a.adjoint() * a;
                }
                hermitize(&delta)
            })
            .collect()
    }

    /// Cohomology dimensions computed from Laplacian kernels, cross-checked
    /// against rank-nullity; disagreement is a hard error.
    pub fn cohomology(&self, tol: &TolPolicy) -> Result<CohomologyReport> {
        self.require_complex()?;
        let laplacians = self.laplacians();
        let mut dims = Vec::with_capacity(self.positions());
        let mut projectors = Vec::with_capacity(self.positions());
        let mut marginal = false;

        let anchor = operator_scale(&self.differentials);
        let a_anchor = (anchor > 0.0).then_some(anchor);
        let delta_anchor = (anchor > 0.0).then_some(anchor * anchor);

        let rank_decisions: Vec<_> = self
            .differentials
            .iter()
            .map(|a| rank_tol_anchored(a, a_anchor, tol))
            .collect();

        for j in 0..self.positions() {
            let delta_decision = rank_tol_anchored(&laplacians[j], delta_anchor, tol);
            marginal |= delta_decision.marginal;
            let via_laplacian = self.spaces[j] - delta_decision.rank;

            let ker_aj = if j < self.differentials.len() {
                marginal |= rank_decisions[j].marginal;
                self.spaces[j] - rank_decisions[j].rank
            } else {
                self.spaces[j]
            };
            let im_prev = if j > 0 {
                marginal |= rank_decisions[j - 1].marginal;
                rank_decisions[j - 1].rank
            } else {
                0
            };
            let via_rank = ker_aj - im_prev;

            if via_laplacian != via_rank {
                return Err(Error::CohomologyMismatch {
                    position: j,
                    via_laplacian,
                    via_rank,
                });
            }
            dims.push(via_laplacian);
            projectors.push(kernel_projector_anchored(&laplacians[j], delta_anchor, tol));
        }

        let index = dims
            .iter()
            .enumerate()
            .map(|(j, &d)| if j % 2 == 0 { d as i64 } else { -(d as i64) })
            .sum();

        Ok(CohomologyReport {
            dims,
            harmonic_projectors: projectors,
            index,
            marginal,
        })
    }

    /// B_j := Δ_j⁺ A_j*. For a valid complex the identities
    /// A_{j−1}B_{j−1} + B_jA_j = 1 − π_j (harmonic projector) and
    /// B_j B_{j+1} = 0 hold to COMPOSE_TOL.
    pub fn hodge_parametrix(&self, tol: &TolPolicy) -> Result<Parametrix> {
        self.require_complex()?;
        let laplacians = self.laplacians();
        let anchor = operator_scale(&self.differentials);
        let delta_anchor = (anchor > 0.0).then_some(anchor * anchor);
        let operators: Vec<CMatrix> = (0..self.differentials.len())
            .map(|j| {
                let (d, _) = pinv_anchored(&laplacians[j], delta_anchor, tol);
                d * self.differentials[j].adjoint()
            })
            .collect();
        let remainders = (0..self.positions())
            .map(|j| {
                let mut r = CMatrix::identity(self.spaces[j], self.spaces[j]);
                if j > 0 {
                    r -= &self.differentials[j - 1] * &operators[j - 1];
                }
                if j < self.differentials.len() {
                    r -= &operators[j] * &self.differentials[j];
                }
                r
            })
            .collect();
        Ok(Parametrix {
            operators,
            remainders,
        })
    }

    /// Apply the same unitary (or invertible) change of basis T_j on every
    /// space: A_j ↦ T_{j+1} A_j T_j⁻¹.
    pub fn conjugated(&self, transforms: &[CMatrix]) -> Result<FiniteComplex> {
        if transforms.len() != self.positions() {
            return Err(Error::Shape {
                position: 0,
                detail: "one transform per space required".into(),
            });
        }
        let inverses: Vec<CMatrix> = transforms
            .iter()
            .map(|t| {
                t.clone()
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidPoint("singular basis transform".into()))
            })
            .collect::<Result<_>>()?;
        let differentials = (0..self.differentials.len())
            .map(|j| &transforms[j + 1] * &self.differentials[j] * &inverses[j])
            .collect();
        FiniteComplex::new(self.spaces.clone(), differentials)
    }
}

/// Top-down correction of a quasicomplex (operators whose consecutive
/// compositions are small) into an honest complex: the last operator is
/// kept, and each earlier one is replaced by π_{j+1} A_j with π_{j+1} the
/// orthogonal projection onto ker Ã_{j+1}, built from the pseudoinverse of
/// the corrected Laplacian. Positions already composing to zero are left
/// bit-identical, which makes the procedure idempotent.
pub fn lift_quasicomplex(
    ops: &[CMatrix],
    tol: &TolPolicy,
) -> Result<(FiniteComplex, CorrectionLog)> {
    let spaces = chained_spaces(ops)?;
    let n = ops.len();
    let mut out: Vec<CMatrix> = ops.to_vec();
    let mut corrections = vec![0.0; n];
    let mut marginal = false;

    let anchor = operator_scale(ops);
    let a_anchor = (anchor > 0.0).then_some(anchor);
    let delta_anchor = (anchor > 0.0).then_some(anchor * anchor);

    let input_compositions: Vec<f64> = (0..n.saturating_sub(1))
        .map(|j| {
            let scale = 1.0 + op_norm(&ops[j + 1]) * op_norm(&ops[j]);
            op_norm(&(&ops[j + 1] * &ops[j])) / scale
        })
        .collect();

    for j in (1..n).rev() {
        let scale = 1.0 + op_norm(&out[j]) * op_norm(&out[j - 1]);
        let defect = op_norm(&(&out[j] * &out[j - 1])) / scale;
        if defect <= COMPOSE_TOL {
            continue;
        }
        let dim = out[j].ncols();
        let mut delta = &out[j] * out[j].adjoint();
        if j + 1 < n {
            delta += out[j + 1].adjoint() * &out[j + 1];
        }
        let delta = hermitize(&delta);
        let (d, decision) = pinv_anchored(&delta, delta_anchor, tol);
        marginal |= decision.marginal;

        // The kernel of Δ_{j+1} must be exactly the harmonic space
        // ker Ã_{j+1} ∩ ker Ã_j*; any extra deficiency means the
        // pseudo-inversion is not trustworthy at this position.
        let rank_j = rank_tol_anchored(&out[j], a_anchor, tol).rank;
        let rank_next = if j + 1 < n {
            rank_tol_anchored(&out[j + 1], a_anchor, tol).rank
        } else {
            0
        };
        let expected_harmonic = dim - rank_j - rank_next;
        let got_harmonic = dim - decision.rank;
        if got_harmonic > expected_harmonic {
            return Err(Error::LaplacianSingular { position: j });
        }

        let pi = CMatrix::identity(dim, dim) - out[j].adjoint() * d * &out[j];
        let corrected = pi * &out[j - 1];
        corrections[j - 1] = op_norm(&(&corrected - &out[j - 1]));
        out[j - 1] = corrected;
    }

    let complex = FiniteComplex::new(spaces, out)?;
    Ok((
        complex,
        CorrectionLog {
            correction_norms: corrections,
            input_composition_norms: input_compositions,
            marginal,
        },
    ))
}

fn chained_spaces(ops: &[CMatrix]) -> Result<Vec<usize>> {
    if ops.is_empty() {
        return Err(Error::Shape {
            position: 0,
            detail: "need at least one operator".into(),
        });
    }
    let mut spaces = vec![ops[0].ncols()];
    for (j, a) in ops.iter().enumerate() {
        if j > 0 && a.ncols() != ops[j - 1].nrows() {
            return Err(Error::Shape {
                position: j,
                detail: format!(
                    "operator {} has {} columns but operator {} has {} rows",
                    j,
                    a.ncols(),
                    j - 1,
                    ops[j - 1].nrows()
                ),
            });
        }
        ensure_finite(a)?;
        spaces.push(a.nrows());
    }
    Ok(spaces)
}

/// Closed discrete surfaces with exact integer incidence differentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Surface {
    SphereOctahedron,
    TorusGrid,
}

/// Simplicial/cellular cochain complex of the chosen surface; the
/// compositions vanish exactly since the incidence matrices are integral.
pub fn derham_demo(surface: Surface) -> FiniteComplex {
    match surface {
        Surface::SphereOctahedron => octahedron_cochain(),
        Surface::TorusGrid => torus_grid_cochain(4, 4),
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn octahedron_cochain() -> FiniteComplex {
    // Vertices: 0 (top), 1..4 (equator cycle), 5 (bottom).
    let edges: Vec<(usize, usize)> = vec![
        (0, 1),
        (0, 2),
        (0, 3),
        (0, 4),
        (1, 2),
        (2, 3),
        (3, 4),
        (1, 4),
        (1, 5),
        (2, 5),
        (3, 5),
        (4, 5),
    ];
    let faces: Vec<(usize, usize, usize)> = vec![
        (0, 1, 2),
        (0, 2, 3),
        (0, 3, 4),
        (0, 1, 4),
        (1, 2, 5),
        (2, 3, 5),
        (3, 4, 5),
        (1, 4, 5),
    ];
    let edge_index = |a: usize, b: usize| edges.iter().position(|&e| e == (a, b)).unwrap();

    let mut d0 = CMatrix::zeros(edges.len(), 6);
    for (row, &(a, b)) in edges.iter().enumerate() {
        d0[(row, a)] = real(-1.0);
        d0[(row, b)] = real(1.0);
    }
    let mut d1 = CMatrix::zeros(faces.len(), edges.len());
    for (row, &(a, b, c)) in faces.iter().enumerate() {
        d1[(row, edge_index(b, c))] = real(1.0);
        d1[(row, edge_index(a, c))] = real(-1.0);
        d1[(row, edge_index(a, b))] = real(1.0);
    }
    FiniteComplex::new(vec![6, edges.len(), faces.len()], vec![d0, d1]).unwrap()
}

fn torus_grid_cochain(nx: usize, ny: usize) -> FiniteComplex {
    let v = nx * ny;
    let vid = |x: usize, y: usize| (x % nx) * ny + (y % ny);
    // Edge ids: horizontal h(x,y) first, then vertical v(x,y).
    let h = |x: usize, y: usize| (x % nx) * ny + (y % ny);
    let vv = |x: usize, y: usize| v + (x % nx) * ny + (y % ny);
    let e = 2 * v;
    let f = v;

    let mut d0 = CMatrix::zeros(e, v);
    for x in 0..nx {
        for y in 0..ny {
            d0[(h(x, y), vid(x, y))] += real(-1.0);
            d0[(h(x, y), vid(x + 1, y))] += real(1.0);
            d0[(vv(x, y), vid(x, y))] += real(-1.0);
            d0[(vv(x, y), vid(x, y + 1))] += real(1.0);
        }
    }
    let mut d1 = CMatrix::zeros(f, e);
    for x in 0..nx {
        for y in 0..ny {
            let face = vid(x, y);
            d1[(face, h(x, y))] += real(1.0);
            d1[(face, vv(x + 1, y))] += real(1.0);
            d1[(face, h(x, y + 1))] += real(-1.0);
            d1[(face, vv(x, y))] += real(-1.0);
        }
    }
    FiniteComplex::new(vec![v, e, f], vec![d0, d1]).unwrap()
}

/// A grid of complexes with identical graded dimensions, one per labeled
/// parameter point. Fibers are stored densely and treated pointwise.
#[derive(Debug, Clone)]
pub struct FamilyComplex {
    pub labels: Vec<String>,
    pub fibers: Vec<FiniteComplex>,
}

impl FamilyComplex {
    pub fn new(labels: Vec<String>, fibers: Vec<FiniteComplex>) -> Result<Self> {
        if labels.len() != fibers.len() {
            return Err(Error::Shape {
                position: 0,
                detail: "one label per fiber required".into(),
            });
        }
        if let Some(first) = fibers.first() {
            for (i, fiber) in fibers.iter().enumerate() {
                if fiber.spaces() != first.spaces() {
                    return Err(Error::Shape {
                        position: i,
                        detail: "fibers must share the same graded dimensions".into(),
                    });
                }
            }
        }
        Ok(FamilyComplex { labels, fibers })
    }

    pub fn len(&self) -> usize {
        self.fibers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fibers.is_empty()
    }
}

// --- serialization -------------------------------------------------------

pub(crate) fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<[f64; 2]>], nrows: usize, ncols: usize) -> Option<CMatrix> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return None;
    }
    Some(CMatrix::from_fn(nrows, ncols, |r, c| {
        Complex64::new(rows[r][c][0], rows[r][c][1])
    }))
}

#[derive(Serialize, Deserialize)]
struct ComplexDoc {
    spaces: Vec<usize>,
    differentials: Vec<Vec<Vec<[f64; 2]>>>,
}

impl Serialize for FiniteComplex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ComplexDoc {
            spaces: self.spaces.clone(),
            differentials: self.differentials.iter().map(matrix_to_rows).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FiniteComplex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = ComplexDoc::deserialize(deserializer)?;
        if doc.differentials.len() + 1 != doc.spaces.len() {
            return Err(D::Error::custom("spaces/differentials length mismatch"));
        }
        let mats: Vec<CMatrix> = doc
            .differentials
            .iter()
            .enumerate()
            .map(|(j, rows)| {
                matrix_from_rows(rows, doc.spaces[j + 1], doc.spaces[j])
                    .ok_or_else(|| D::Error::custom(format!("differential {j} has wrong shape")))
            })
            .collect::<std::result::Result<_, _>>()?;
        FiniteComplex::new(doc.spaces, mats).map_err(D::Error::custom)
    }
}

impl Serialize for CohomologyReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("CohomologyReport", 3)?;
        s.serialize_field("dims", &self.dims)?;
        s.serialize_field("index", &self.index)?;
        s.serialize_field("marginal", &self.marginal)?;
        s.end()
    }
}
