//! Projected (Toeplitz) complexes: operators compressed between ranges of
//! idempotents, the block lift that turns them into ordinary complexes with
//! the same cohomology, parametrix extraction from the lift, and correction
//! of projected quasicomplexes, optionally preserving block upper-triangular
//! structure.

use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::complexes::{CohomologyReport, CorrectionLog, FiniteComplex, Parametrix, COMPOSE_TOL};
use crate::error::{Error, Result};
use crate::numlin::{
    column_space_basis, column_space_basis_anchored, kernel_basis, kernel_basis_anchored, op_norm,
    rank_tol_anchored, CMatrix,
    TolPolicy,
};

/// A finite complex whose differentials are compressed by idempotents:
/// P_{j+1} A_j P_j = A_j. The idempotents need not be Hermitian.
#[derive(Debug, Clone)]
pub struct ProjectedComplex {
    ambient: FiniteComplex,
    projections: Vec<CMatrix>,
}

/// Placement of one summand inside a lifted position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Block {
    /// Which original position this summand copies.
    pub level: usize,
    pub offset: usize,
    pub dim: usize,
}

/// The lift of a projected complex: position j carries H_j ⊕ H_{j−1} ⊕ … ⊕ H_0
/// and the differential is diag(A_j, 0, …) plus the alternating subdiagonal
/// (1−P_j, P_{j−1}, 1−P_{j−2}, …).
#[derive(Debug, Clone)]
pub struct LiftedComplex {
    complex: FiniteComplex,
    layout: Vec<Vec<Block>>,
    original_positions: usize,
}

/// Parametrix of the projected complex extracted from a parametrix of its
/// lift: B_j = P_j B^{[j]}_{j+1,j} P_{j+1}, with remainders
/// R_j = P_j − A_{j−1}B_{j−1} − B_jA_j.
#[derive(Debug, Clone)]
pub struct ProjectedParametrix {
    pub operators: Vec<CMatrix>,
    pub remainders: Vec<CMatrix>,
}

/// Block split for the upper-triangular preservation path: `top_dims[j]` is
/// the size of the leading diagonal block at position j.
#[derive(Debug, Clone)]
pub struct UpperTriangularSplit {
    pub top_dims: Vec<usize>,
}

impl ProjectedComplex {
    pub fn new(ambient: FiniteComplex, projections: Vec<CMatrix>) -> Result<Self> {
        if projections.len() != ambient.positions() {
            return Err(Error::Shape {
                position: 0,
                detail: "one projection per space required".into(),
            });
        }
        for (j, p) in projections.iter().enumerate() {
            let n = ambient.spaces()[j];
            if p.nrows() != n || p.ncols() != n {
                return Err(Error::Shape {
                    position: j,
                    detail: format!("P_{j} is {}×{}, expected {n}×{n}", p.nrows(), p.ncols()),
                });
            }
            let scale = 1.0 + op_norm(p).powi(2);
            if op_norm(&(p * p - p)) > COMPOSE_TOL * scale {
                return Err(Error::Shape {
                    position: j,
                    detail: format!("P_{j} is not idempotent"),
                });
            }
        }
        ambient.require_complex()?;
        for j in 0..ambient.differentials().len() {
            let a = &ambient.differentials()[j];
            let scale = 1.0 + op_norm(a) * (1.0 + op_norm(&projections[j + 1]));
            let left = op_norm(&(a - &projections[j + 1] * a));
            let right = op_norm(&(a - a * &projections[j]));
            if left > COMPOSE_TOL * scale || right > COMPOSE_TOL * scale {
                return Err(Error::Shape {
                    position: j,
                    detail: "differential is not compressed by the projections".into(),
                });
            }
        }
        Ok(ProjectedComplex {
            ambient,
            projections,
        })
    }

    pub fn ambient(&self) -> &FiniteComplex {
        &self.ambient
    }

    pub fn projections(&self) -> &[CMatrix] {
        &self.projections
    }

    pub fn positions(&self) -> usize {
        self.ambient.positions()
    }

    /// The complex A_j: im P_j → im P_{j+1} written on orthonormal bases of
    /// the ranges; computing its cohomology never touches the lift.
    pub fn restricted_complex(&self, tol: &TolPolicy) -> (FiniteComplex, Vec<CMatrix>) {
        let bases: Vec<CMatrix> = self
            .projections
            .iter()
            .map(|p| column_space_basis(p, tol))
            .collect();
        let spaces: Vec<usize> = bases.iter().map(|b| b.ncols()).collect();
        let differentials = (0..self.ambient.differentials().len())
            .map(|j| bases[j + 1].adjoint() * &self.ambient.differentials()[j] * &bases[j])
            .collect();
        (
            FiniteComplex::new(spaces, differentials)
                .expect("restriction of a projected complex is a complex"),
            bases,
        )
    }

    /// Cohomology of the restricted maps, independent of lifting.
    pub fn projected_cohomology(&self, tol: &TolPolicy) -> Result<CohomologyReport> {
        self.restricted_complex(tol).0.cohomology(tol)
    }

    /// The block lift. The final position of the materialized complex is
    /// truncation padding; cohomology comparisons use positions 0..M.
    pub fn lift(&self) -> LiftedComplex {
        let n = self.ambient.spaces();
        let m = n.len() - 1; // highest original position
        let level_dim = |level: usize| if level <= m { n[level] } else { 0 };

        let mut layout: Vec<Vec<Block>> = Vec::new();
        for j in 0..=m + 1 {
            let mut blocks = Vec::new();
            let mut offset = 0;
            for i in 0..=j {
                let level = j - i;
                let dim = level_dim(level);
                blocks.push(Block { level, offset, dim });
                offset += dim;
            }
            layout.push(blocks);
        }
        let spaces: Vec<usize> = layout
            .iter()
            .map(|blocks| blocks.iter().map(|b| b.dim).sum())
            .collect();

        let one = Complex64::new(1.0, 0.0);
        let differentials = (0..=m)
            .map(|j| {
                let rows = spaces[j + 1];
                let cols = spaces[j];
                let mut a = CMatrix::zeros(rows, cols);
                // Row block 0 carries A_j (absent at the top of the chain).
                if j < self.ambient.differentials().len() {
                    let d = &self.ambient.differentials()[j];
                    a.view_mut((0, 0), (d.nrows(), d.ncols())).copy_from(d);
                }
                // Subdiagonal: row block i from column block i−1, alternating
                // 1−P and P starting with 1−P_j.
                for i in 1..=j + 1 {
                    let level = j + 1 - i;
                    if level_dim(level) == 0 {
                        continue;
                    }
                    let p = &self.projections[level];
                    let block = if i % 2 == 1 {
                        CMatrix::identity(p.nrows(), p.ncols()) - p
                    } else {
                        p.clone()
                    };
                    let row_off = layout[j + 1][i].offset;
                    let col_off = layout[j][i - 1].offset;
                    a.view_mut((row_off, col_off), (block.nrows(), block.ncols()))
                        .copy_from(&(block * one));
                }
                a
            })
            .collect();

        LiftedComplex {
            complex: FiniteComplex::new(spaces, differentials)
                .expect("lift of a projected complex is a complex"),
            layout,
            original_positions: m + 1,
        }
    }
}

impl LiftedComplex {
    pub fn complex(&self) -> &FiniteComplex {
        &self.complex
    }

    pub fn layout(&self) -> &[Vec<Block>] {
        &self.layout
    }

    /// Cohomology dimensions at the original positions 0..M (the extra
    /// materialized position is truncation padding and dropped).
    pub fn cohomology_dims(&self, tol: &TolPolicy) -> Result<Vec<usize>> {
        let mut dims = self.complex.cohomology(tol)?.dims;
        dims.truncate(self.original_positions);
        Ok(dims)
    }
}

/// B_j := P_j B^{[j]}_{j+1,j} P_{j+1} from a parametrix of the lift; the
/// relevant block of B_[j] maps the leading summand of position j+1 to the
/// leading summand of position j.
pub fn extract_parametrix(
    pc: &ProjectedComplex,
    lift_parametrix: &Parametrix,
) -> ProjectedParametrix {
    let n = pc.ambient().spaces();
    let m = n.len() - 1;
    let operators: Vec<CMatrix> = (0..m)
        .map(|j| {
            let b = &lift_parametrix.operators[j]; // lift position j+1 → j
            let block = b.view((0, 0), (n[j], n[j + 1])).into_owned();
            &pc.projections()[j] * block * &pc.projections()[j + 1]
        })
        .collect();
    let remainders = (0..=m)
        .map(|j| {
            let mut r = pc.projections()[j].clone();
            if j > 0 {
                r -= &pc.ambient().differentials()[j - 1] * &operators[j - 1];
            }
            if j < m {
                r -= &operators[j] * &pc.ambient().differentials()[j];
            }
            r
        })
        .collect();
    ProjectedParametrix {
        operators,
        remainders,
    }
}

/// Correct a projected quasicomplex (operators compressed by the projections
/// whose compositions are merely small) into a projected complex. Mirrors the
/// plain top-down correction, with the orthogonal projection taken onto
/// ker(Ã_j) ∩ im P_j so compression survives. With `preserve` set, inputs in
/// block form (A_j, K_j; 0, Q_j) whose diagonal blocks already compose to
/// zero keep those diagonal blocks bit-identical.
pub fn lift_quasicomplex_projected(
    ops: &[CMatrix],
    projections: &[CMatrix],
    preserve: Option<&UpperTriangularSplit>,
    tol: &TolPolicy,
) -> Result<(ProjectedComplex, CorrectionLog)> {
    if ops.is_empty() || projections.len() != ops.len() + 1 {
        return Err(Error::Shape {
            position: 0,
            detail: "need operators A_0..A_{n-1} and projections P_0..P_n".into(),
        });
    }
    for (j, a) in ops.iter().enumerate() {
        let scale = 1.0 + op_norm(a) * (1.0 + op_norm(&projections[j + 1]));
        if op_norm(&(a - &projections[j + 1] * a)) > COMPOSE_TOL * scale
            || op_norm(&(a - a * &projections[j])) > COMPOSE_TOL * scale
        {
            return Err(Error::Shape {
                position: j,
                detail: "input operator is not compressed by the projections".into(),
            });
        }
    }
    if let Some(split) = preserve {
        if split.top_dims.len() != projections.len() {
            return Err(Error::Shape {
                position: 0,
                detail: "one top-block size per space required".into(),
            });
        }
        for (j, a) in ops.iter().enumerate() {
            let (top_r, top_c) = (split.top_dims[j + 1], split.top_dims[j]);
            let lower_left = a.view((top_r, 0), (a.nrows() - top_r, top_c));
            if lower_left.iter().any(|z| z.norm() > 0.0) {
                return Err(Error::InvalidPoint(format!(
                    "operator {j} is not block upper-triangular"
                )));
            }
        }
        for j in 0..ops.len() - 1 {
            let (r, k) = (split.top_dims[j + 2], split.top_dims[j]);
            let hi = ops[j + 1].view((0, 0), (r, split.top_dims[j + 1]));
            let lo = ops[j].view((0, 0), (split.top_dims[j + 1], k));
            let prod = hi * lo;
            let scale = 1.0 + op_norm(&ops[j + 1]) * op_norm(&ops[j]);
            if op_norm(&prod.into_owned()) > COMPOSE_TOL * scale {
                return Err(Error::NotAComplex {
                    position: j,
                    defect: f64::NAN,
                });
            }
        }
    }

    let n = ops.len();
    let mut out: Vec<CMatrix> = ops.to_vec();
    let mut corrections = vec![0.0; n];
    let mut marginal = false;
    let input_compositions: Vec<f64> = (0..n - 1)
        .map(|j| {
            let scale = 1.0 + op_norm(&ops[j + 1]) * op_norm(&ops[j]);
            op_norm(&(&ops[j + 1] * &ops[j])) / scale
        })
        .collect();

    for j in (1..n).rev() {
        let scale = 1.0 + op_norm(&out[j]) * op_norm(&out[j - 1]);
        if op_norm(&(&out[j] * &out[j - 1])) / scale <= COMPOSE_TOL {
            continue;
        }
        // Orthogonal projector onto ker(Ã_j) ∩ im P_j, in ambient coordinates.
        let anchor = crate::complexes::operator_scale(ops);
        let anchor = (anchor > 0.0).then_some(anchor);
        let range = column_space_basis(&projections[j], tol);
        let restricted = &out[j] * &range;
        let decision = rank_tol_anchored(&restricted, anchor, tol);
        marginal |= decision.marginal;
        let ker_coords = kernel_basis_anchored(&restricted, anchor, tol);
        let ker_ambient = &range * ker_coords;
        let pi = &ker_ambient * ker_ambient.adjoint();

        let mut corrected = &pi * &out[j - 1];
        if let Some(split) = preserve {
            let (rows, top_c) = (corrected.nrows(), split.top_dims[j - 1]);
            corrected
                .view_mut((0, 0), (rows, top_c))
                .copy_from(&ops[j - 1].view((0, 0), (rows, top_c)));
        }
        corrections[j - 1] = op_norm(&(&corrected - &out[j - 1]));
        out[j - 1] = corrected;
    }

    let spaces: Vec<usize> = std::iter::once(out[0].ncols())
        .chain(out.iter().map(|a| a.nrows()))
        .collect();
    let pc = ProjectedComplex::new(
        FiniteComplex::new(spaces, out)?,
        projections.to_vec(),
    )?;
    Ok((
        pc,
        CorrectionLog {
            correction_norms: corrections,
            input_composition_norms: input_compositions,
            marginal,
        },
    ))
}

/// Orthonormal basis of ker A_[j] predicted by the structure of the lift:
/// ker(A_j | im P_j) ⊕ ker P_{j−1} ⊕ im P_{j−2} ⊕ ker P_{j−3} ⊕ …
pub fn predicted_kernel_basis(pc: &ProjectedComplex, j: usize, tol: &TolPolicy) -> CMatrix {
    let lift = pc.lift();
    let blocks = &lift.layout()[j];
    let total: usize = blocks.iter().map(|b| b.dim).sum();
    let mut pieces: Vec<(usize, CMatrix)> = Vec::new();
    for (i, block) in blocks.iter().enumerate() {
        if block.dim == 0 {
            continue;
        }
        let basis = if i == 0 {
            // ker(A_level restricted to im P_level)
            let p = &pc.projections()[block.level];
            let a = if block.level < pc.ambient().differentials().len() {
                pc.ambient().differentials()[block.level].clone()
            } else {
                CMatrix::zeros(0, block.dim)
            };
            let mut stacked = CMatrix::zeros(a.nrows() + block.dim, block.dim);
            stacked.view_mut((0, 0), (a.nrows(), block.dim)).copy_from(&a);
            stacked
                .view_mut((a.nrows(), 0), (block.dim, block.dim))
                .copy_from(&(CMatrix::identity(block.dim, block.dim) - p));
            kernel_basis(&stacked, tol)
        } else if i % 2 == 1 {
            kernel_basis(&pc.projections()[block.level], tol)
        } else {
            column_space_basis(&pc.projections()[block.level], tol)
        };
        pieces.push((block.offset, basis));
    }
    assemble_block_columns(total, &pieces)
}

/// Orthonormal basis of im A_[j] predicted by the lift structure:
/// im(A_j | im P_j) ⊕ ker P_j ⊕ im P_{j−1} ⊕ ker P_{j−2} ⊕ …
pub fn predicted_image_basis(pc: &ProjectedComplex, j: usize, tol: &TolPolicy) -> CMatrix {
    let lift = pc.lift();
    let blocks = &lift.layout()[j + 1];
    let total: usize = blocks.iter().map(|b| b.dim).sum();
    let mut pieces: Vec<(usize, CMatrix)> = Vec::new();
    for (i, block) in blocks.iter().enumerate() {
        if block.dim == 0 {
            continue;
        }
        let basis = if i == 0 {
            if block.level == 0 || block.level - 1 >= pc.ambient().differentials().len() {
                CMatrix::zeros(block.dim, 0)
            } else {
                let scale = crate::complexes::operator_scale(pc.ambient().differentials());
                column_space_basis_anchored(
                    &pc.ambient().differentials()[block.level - 1],
                    (scale > 0.0).then_some(scale),
                    tol,
                )
            }
        } else if i % 2 == 1 {
            kernel_basis(&pc.projections()[block.level], tol)
        } else {
            column_space_basis(&pc.projections()[block.level], tol)
        };
        pieces.push((block.offset, basis));
    }
    assemble_block_columns(total, &pieces)
}

fn assemble_block_columns(total_rows: usize, pieces: &[(usize, CMatrix)]) -> CMatrix {
    let total_cols: usize = pieces.iter().map(|(_, b)| b.ncols()).collect::<Vec<_>>().iter().sum();
    let mut out = CMatrix::zeros(total_rows, total_cols);
    let mut col = 0;
    for (offset, basis) in pieces {
        out.view_mut((*offset, col), (basis.nrows(), basis.ncols()))
            .copy_from(basis);
        col += basis.ncols();
    }
    out
}

impl Serialize for ProjectedComplex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("ProjectedComplex", 3)?;
        s.serialize_field("spaces", self.ambient.spaces())?;
        s.serialize_field(
            "differentials",
            &self
                .ambient
                .differentials()
                .iter()
                .map(crate::complexes::matrix_to_rows)
                .collect::<Vec<_>>(),
        )?;
        s.serialize_field(
            "projections",
            &self
                .projections
                .iter()
                .map(crate::complexes::matrix_to_rows)
                .collect::<Vec<_>>(),
        )?;
        s.end()
    }
}
