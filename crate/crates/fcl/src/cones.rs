//! Morphisms of complexes and their mapping cones, kernel and cokernel
//! complexes, and the dimension bookkeeping that decides when the cone's
//! cohomology splits as ℋ_j(ker) ⊕ ℋ_{j−1}(coker). Includes the explicit
//! two-row instance showing that the splitting fails without the
//! trivial-quotient hypothesis.

use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::complexes::{CohomologyReport, FiniteComplex};
use crate::error::{Error, Result};
use crate::numlin::{
    column_space_basis, ensure_finite, kernel_basis, op_norm, rank_tol, rank_tol_anchored, CMatrix,
    TolPolicy,
};

const SQUARE_TOL: f64 = 1e-10;

/// Vertical maps T_j between two complexes with commuting squares
/// T_{j+1} A_j = Q_j T_j.
#[derive(Debug, Clone)]
pub struct ComplexMorphism {
    source: FiniteComplex,
    target: FiniteComplex,
    verticals: Vec<CMatrix>,
}

/// Cohomology bookkeeping for a morphism: cone, kernel and cokernel
/// dimensions, the per-position dimensions of the quotient
/// Q_j⁻¹(im T_{j+1}) / (ker Q_j + im T_j), and whether the splitting held.
#[derive(Debug, Clone)]
pub struct ConeDecompositionReport {
    pub cone_dims: Vec<usize>,
    pub ker_dims: Vec<usize>,
    pub coker_dims: Vec<usize>,
    pub assumption_dims: Vec<usize>,
    pub cone_index: i64,
    pub ker_index: i64,
    pub coker_index: i64,
    pub decomposition_holds: bool,
    pub marginal: bool,
}

impl ComplexMorphism {
    pub fn new(
        source: FiniteComplex,
        target: FiniteComplex,
        verticals: Vec<CMatrix>,
    ) -> Result<Self> {
        if source.positions() != target.positions() || verticals.len() != source.positions() {
            return Err(Error::Shape {
                position: 0,
                detail: format!(
                    "morphism needs equal-length complexes and one vertical per space: {} vs {} vs {}",
                    source.positions(),
                    target.positions(),
                    verticals.len()
                ),
            });
        }
        for (j, t) in verticals.iter().enumerate() {
            if t.nrows() != target.spaces()[j] || t.ncols() != source.spaces()[j] {
                return Err(Error::Shape {
                    position: j,
                    detail: format!(
                        "T_{j} is {}×{}, expected {}×{}",
                        t.nrows(),
                        t.ncols(),
                        target.spaces()[j],
                        source.spaces()[j]
                    ),
                });
            }
            ensure_finite(t)?;
        }
        let morphism = ComplexMorphism {
            source,
            target,
            verticals,
        };
        morphism.require_commuting_squares()?;
        Ok(morphism)
    }

    pub fn source(&self) -> &FiniteComplex {
        &self.source
    }

    pub fn target(&self) -> &FiniteComplex {
        &self.target
    }

    pub fn verticals(&self) -> &[CMatrix] {
        &self.verticals
    }

    fn require_commuting_squares(&self) -> Result<()> {
        for j in 0..self.source.differentials().len() {
            let a = &self.source.differentials()[j];
            let q = &self.target.differentials()[j];
            let lhs = &self.verticals[j + 1] * a;
            let rhs = q * &self.verticals[j];
            let scale = 1.0
                + op_norm(&self.verticals[j + 1]) * op_norm(a)
                + op_norm(q) * op_norm(&self.verticals[j]);
            let defect = op_norm(&(lhs - rhs)) / scale;
            if defect > SQUARE_TOL {
                return Err(Error::CommutingSquares {
                    position: j,
                    defect,
                });
            }
        }
        Ok(())
    }

    /// The cone complex on H_j ⊕ L_{j−1} with blocks (−A_j, 0; T_j, Q_{j−1}).
    pub fn mapping_cone(&self) -> FiniteComplex {
        let h = self.source.spaces();
        let l = self.target.spaces();
        let positions = h.len() + 1;
        let dim_h = |j: usize| if j < h.len() { h[j] } else { 0 };
        let dim_l = |j: usize| if j >= 1 { l[j - 1] } else { 0 };
        let spaces: Vec<usize> = (0..positions).map(|j| dim_h(j) + dim_l(j)).collect();

        let minus_one = Complex64::new(-1.0, 0.0);
        let differentials = (0..positions - 1)
            .map(|j| {
                let mut c = CMatrix::zeros(spaces[j + 1], spaces[j]);
                if j < self.source.differentials().len() {
                    let a = &self.source.differentials()[j];
                    c.view_mut((0, 0), (a.nrows(), a.ncols()))
                        .copy_from(&(a * minus_one));
                }
                let t = &self.verticals[j];
                c.view_mut((dim_h(j + 1), 0), (t.nrows(), t.ncols()))
                    .copy_from(t);
                if j >= 1 && j - 1 < self.target.differentials().len() {
                    let q = &self.target.differentials()[j - 1];
                    c.view_mut((dim_h(j + 1), dim_h(j)), (q.nrows(), q.ncols()))
                        .copy_from(q);
                }
                c
            })
            .collect();
        FiniteComplex::new(spaces, differentials).expect("cone of a morphism is a complex")
    }

    /// The complex induced on orthonormal bases of ker T_j. Returns the
    /// complex together with the chosen bases (ambient columns).
    pub fn kernel_complex(&self, tol: &TolPolicy) -> (FiniteComplex, Vec<CMatrix>) {
        let bases: Vec<CMatrix> = self
            .verticals
            .iter()
            .map(|t| kernel_basis(t, tol))
            .collect();
        let spaces: Vec<usize> = bases.iter().map(|b| b.ncols()).collect();
        let differentials = (0..self.source.differentials().len())
            .map(|j| bases[j + 1].adjoint() * &self.source.differentials()[j] * &bases[j])
            .collect();
        (
            FiniteComplex::new(spaces, differentials).expect("kernel complex is a complex"),
            bases,
        )
    }

    /// The cokernel complex modeled on orthonormal bases of (im T_j)^⊥ with
    /// the compressed differentials (1 − P_{im T}) Q.
    pub fn cokernel_complex(&self, tol: &TolPolicy) -> (FiniteComplex, Vec<CMatrix>) {
        let bases: Vec<CMatrix> = self
            .verticals
            .iter()
            .map(|t| kernel_basis(&t.adjoint(), tol))
            .collect();
        let spaces: Vec<usize> = bases.iter().map(|b| b.ncols()).collect();
        let differentials = (0..self.target.differentials().len())
            .map(|j| bases[j + 1].adjoint() * &self.target.differentials()[j] * &bases[j])
            .collect();
        (
            FiniteComplex::new(spaces, differentials).expect("cokernel complex is a complex"),
            bases,
        )
    }

    /// Per-position dimension of Q_j⁻¹(im T_{j+1}) / (ker Q_j + im T_j);
    /// zero everywhere means the splitting hypothesis is satisfied.
    pub fn assumption_dims(&self, tol: &TolPolicy) -> Vec<usize> {
        (0..self.target.differentials().len())
            .map(|j| {
                let q = &self.target.differentials()[j];
                let t_next = &self.verticals[j + 1];
                let t_here = &self.verticals[j];
                let l_j = self.target.spaces()[j];

                // S1 = ker((1 − P_{im T_{j+1}}) Q_j); anchor the decision at
                // the scale of Q_j, since the projected product may be pure
                // roundoff when Q_j maps onto im T_{j+1}.
                let b_next = column_space_basis(t_next, tol);
                let proj = CMatrix::identity(t_next.nrows(), t_next.nrows())
                    - &b_next * b_next.adjoint();
                let q_scale = op_norm(q);
                let s1 = l_j
                    - rank_tol_anchored(&(proj * q), (q_scale > 0.0).then_some(q_scale), tol)
                        .rank;

                // S2 = ker Q_j + im T_j  (S2 ⊆ S1 always)
                let kq = kernel_basis(q, tol);
                let mut stacked = CMatrix::zeros(l_j, kq.ncols() + t_here.ncols());
                stacked.view_mut((0, 0), (l_j, kq.ncols())).copy_from(&kq);
                stacked
                    .view_mut((0, kq.ncols()), (l_j, t_here.ncols()))
                    .copy_from(t_here);
                let s2 = rank_tol(&stacked, tol).rank;

                s1 - s2
            })
            .collect()
    }

    /// Computes cone/kernel/cokernel cohomology and checks the splitting
    /// identity position by position (exact integers) whenever the
    /// assumption dimensions all vanish.
    pub fn verify_cone_decomposition(&self, tol: &TolPolicy) -> Result<ConeDecompositionReport> {
        let cone = self.mapping_cone().cohomology(tol)?;
        let (ker, _) = self.kernel_complex(tol);
        let ker = ker.cohomology(tol)?;
        let (coker, _) = self.cokernel_complex(tol);
        let coker = coker.cohomology(tol)?;
        let assumption = self.assumption_dims(tol);

        let assumption_trivial = assumption.iter().all(|&d| d == 0);
        let splits = (0..cone.dims.len()).all(|j| {
            let k = ker.dims.get(j).copied().unwrap_or(0);
            let c = if j >= 1 {
                coker.dims.get(j - 1).copied().unwrap_or(0)
            } else {
                0
            };
            cone.dims[j] == k + c
        });
        let index_identity = cone.index == ker.index - coker.index;

        Ok(ConeDecompositionReport {
            cone_dims: cone.dims.clone(),
            ker_dims: ker.dims.clone(),
            coker_dims: coker.dims.clone(),
            assumption_dims: assumption,
            cone_index: cone.index,
            ker_index: ker.index,
            coker_index: coker.index,
            decomposition_holds: assumption_trivial && splits && index_identity,
            marginal: cone.marginal || ker.marginal || coker.marginal,
        })
    }
}

/// The two-row morphism with source 0 → 0 → H → H → 0 (middle map −1),
/// target 0 → L → L → 0 → 0 (middle map 1) and verticals (0, 0, T₁, 0):
/// its cone is exact for every T₁ while the kernel complex is exact only
/// for T₁ = 0.
pub fn counterexample_instance(t1: &CMatrix) -> Result<ComplexMorphism> {
    if t1.nrows() != t1.ncols() {
        return Err(Error::Shape {
            position: 0,
            detail: "T₁ must be square".into(),
        });
    }
    let m = t1.nrows();
    let id = CMatrix::identity(m, m);

    let source = FiniteComplex::new(
        vec![0, 0, m, m],
        vec![
            CMatrix::zeros(0, 0),
            CMatrix::zeros(m, 0),
            &id * Complex64::new(-1.0, 0.0),
        ],
    )?;
    let target = FiniteComplex::new(
        vec![0, m, m, 0],
        vec![CMatrix::zeros(m, 0), id, CMatrix::zeros(0, m)],
    )?;
    let verticals = vec![
        CMatrix::zeros(0, 0),
        CMatrix::zeros(m, 0),
        t1.clone(),
        CMatrix::zeros(0, m),
    ];
    ComplexMorphism::new(source, target, verticals)
}

impl Serialize for ConeDecompositionReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Indices {
            cone: i64,
            ker: i64,
            coker: i64,
        }
        let mut s = serializer.serialize_struct("ConeDecompositionReport", 6)?;
        s.serialize_field("cone_dims", &self.cone_dims)?;
        s.serialize_field("ker_dims", &self.ker_dims)?;
        s.serialize_field("coker_dims", &self.coker_dims)?;
        s.serialize_field("assumption_dims", &self.assumption_dims)?;
        s.serialize_field(
            "indices",
            &Indices {
                cone: self.cone_index,
                ker: self.ker_index,
                coker: self.coker_index,
            },
        )?;
        s.serialize_field("decomposition_holds", &self.decomposition_holds)?;
        s.end()
    }
}

/// Helper shared by tests and experiments: cohomology of a report target.
pub fn cohomology_dims(c: &FiniteComplex, tol: &TolPolicy) -> Result<CohomologyReport> {
    c.cohomology(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_complex, random_surjective_morphism, rng_from_seed};
    use num_complex::Complex64 as C;

    fn tol() -> TolPolicy {
        TolPolicy::default()
    }

    fn zero_morphism(seed: u64) -> ComplexMorphism {
        let mut rng = rng_from_seed(seed);
        let source = random_complex(&[2, 3, 2], &mut rng);
        let target = random_complex(&[3, 2, 1], &mut rng);
        let verticals = (0..3)
            .map(|j| CMatrix::zeros(target.spaces()[j], source.spaces()[j]))
            .collect();
        ComplexMorphism::new(source, target, verticals).unwrap()
    }

    #[test]
    fn cone_of_zero_morphism_is_block_diagonal_sum() {
        let m = zero_morphism(1);
        let cone = m.mapping_cone();
        assert!(cone.validate().is_complex);
        let cone_dims = cone.cohomology(&tol()).unwrap().dims;
        let src = m.source().cohomology(&tol()).unwrap().dims;
        let tgt = m.target().cohomology(&tol()).unwrap().dims;
        for j in 0..cone_dims.len() {
            let expect = src.get(j).copied().unwrap_or(0)
                + if j >= 1 {
                    tgt.get(j - 1).copied().unwrap_or(0)
                } else {
                    0
                };
            assert_eq!(cone_dims[j], expect, "position {j}");
        }
    }

    #[test]
    fn cone_of_identity_morphism_is_exact() {
        let mut rng = rng_from_seed(5);
        let c = random_complex(&[2, 4, 3], &mut rng);
        let verticals = c
            .spaces()
            .iter()
            .map(|&n| CMatrix::identity(n, n))
            .collect();
        let m = ComplexMorphism::new(c.clone(), c, verticals).unwrap();
        let dims = m.mapping_cone().cohomology(&tol()).unwrap().dims;
        assert!(dims.iter().all(|&d| d == 0), "cone dims {dims:?}");
    }

    #[test]
    fn commuting_square_violation_reports_position() {
        // Nilpotent differentials so the perturbed vertical genuinely moves
        // the square: A₀ = A₁ = (0 1; 0 0).
        let nil = CMatrix::from_row_slice(
            2,
            2,
            &[C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)],
        );
        let c = FiniteComplex::new(vec![2, 2, 2], vec![nil.clone(), nil]).unwrap();
        let mut verticals: Vec<CMatrix> = c
            .spaces()
            .iter()
            .map(|&n| CMatrix::identity(n, n))
            .collect();
        verticals[2][(0, 0)] += C::new(0.5, 0.0);
        match ComplexMorphism::new(c.clone(), c, verticals) {
            Err(Error::CommutingSquares { position, defect }) => {
                assert_eq!(position, 1);
                assert!(defect > SQUARE_TOL);
            }
            other => panic!("expected commuting-square error, got {other:?}"),
        }
    }

    #[test]
    fn kernel_and_cokernel_vanish_for_invertible_verticals() {
        let mut rng = rng_from_seed(12);
        let c = random_complex(&[2, 3, 2], &mut rng);
        let verticals: Vec<CMatrix> = c
            .spaces()
            .iter()
            .map(|&n| CMatrix::identity(n, n))
            .collect();
        let m = ComplexMorphism::new(c.clone(), c, verticals).unwrap();
        let (ker, _) = m.kernel_complex(&tol());
        let (coker, _) = m.cokernel_complex(&tol());
        assert!(ker.spaces().iter().all(|&n| n == 0));
        assert!(coker.spaces().iter().all(|&n| n == 0));
    }

    #[test]
    fn kernel_equals_source_and_cokernel_matches_target_for_zero_morphism() {
        let m = zero_morphism(2);
        let (ker, _) = m.kernel_complex(&tol());
        let (coker, _) = m.cokernel_complex(&tol());
        assert_eq!(ker.spaces(), m.source().spaces());
        assert_eq!(coker.spaces(), m.target().spaces());
        let coker_dims = coker.cohomology(&tol()).unwrap().dims;
        let tgt_dims = m.target().cohomology(&tol()).unwrap().dims;
        assert_eq!(coker_dims, tgt_dims);
    }

    #[test]
    fn structure_maps_preserve_kernels_and_images() {
        // A_j maps ker T_j into ker T_{j+1}; Q_j maps im T_j into im T_{j+1}.
        for seed in 0..10u64 {
            let mut rng = rng_from_seed(40 + seed);
            let m = random_surjective_morphism(&[2, 3, 2], &[1, 2, 1], &mut rng);
            for j in 0..m.source().differentials().len() {
                let (_, bases) = m.kernel_complex(&tol());
                let moved = &m.verticals()[j + 1] * &m.source().differentials()[j] * &bases[j];
                assert!(op_norm(&moved) < 1e-9, "seed {seed} ker containment");
                let b = column_space_basis(&m.verticals()[j], &tol());
                let b_next = column_space_basis(&m.verticals()[j + 1], &tol());
                let proj = CMatrix::identity(b_next.nrows(), b_next.nrows())
                    - &b_next * b_next.adjoint();
                let escaped = proj * &m.target().differentials()[j] * b;
                assert!(op_norm(&escaped) < 1e-9, "seed {seed} im containment");
            }
        }
    }

    #[test]
    fn surjective_verticals_have_trivial_assumption_and_split() {
        for seed in 0..20u64 {
            let mut rng = rng_from_seed(300 + seed);
            let m = random_surjective_morphism(&[2, 3, 2, 1], &[1, 2, 2, 1], &mut rng);
            let report = m.verify_cone_decomposition(&tol()).unwrap();
            assert!(report.assumption_dims.iter().all(|&d| d == 0), "seed {seed}");
            assert!(report.decomposition_holds, "seed {seed}: {report:?}");
            assert_eq!(report.cone_index, report.ker_index - report.coker_index);
        }
    }

    #[test]
    fn identity_morphism_report_is_all_zero() {
        let mut rng = rng_from_seed(77);
        let c = random_complex(&[2, 3, 2], &mut rng);
        let verticals = c
            .spaces()
            .iter()
            .map(|&n| CMatrix::identity(n, n))
            .collect();
        let m = ComplexMorphism::new(c.clone(), c, verticals).unwrap();
        let report = m.verify_cone_decomposition(&tol()).unwrap();
        assert!(report.cone_dims.iter().all(|&d| d == 0));
        assert!(report.ker_dims.iter().all(|&d| d == 0));
        assert!(report.coker_dims.iter().all(|&d| d == 0));
        assert_eq!(
            (report.cone_index, report.ker_index, report.coker_index),
            (0, 0, 0)
        );
        assert!(report.decomposition_holds);
    }

    #[test]
    fn counterexample_cone_is_exact_for_identity_vertical() {
        let m = counterexample_instance(&CMatrix::identity(1, 1)).unwrap();
        let cone = m.mapping_cone();
        // The only nontrivial cone block is (1 0; T₁ 1), which is invertible.
        let dims = cone.cohomology(&tol()).unwrap().dims;
        assert!(dims.iter().all(|&d| d == 0), "cone dims {dims:?}");
    }

    #[test]
    fn counterexample_kernel_complex_dims() {
        let m = counterexample_instance(&CMatrix::identity(1, 1)).unwrap();
        let (ker, _) = m.kernel_complex(&tol());
        let dims = ker.cohomology(&tol()).unwrap().dims;
        assert_eq!(dims, vec![0, 0, 0, 1]);
    }

    #[test]
    fn counterexample_with_zero_vertical_is_exact_on_both_sides() {
        let m = counterexample_instance(&CMatrix::zeros(1, 1)).unwrap();
        let (ker, _) = m.kernel_complex(&tol());
        let (coker, _) = m.cokernel_complex(&tol());
        assert!(ker.cohomology(&tol()).unwrap().dims.iter().all(|&d| d == 0));
        assert!(coker
            .cohomology(&tol())
            .unwrap()
            .dims
            .iter()
            .all(|&d| d == 0));
        let report = m.verify_cone_decomposition(&tol()).unwrap();
        assert!(report.decomposition_holds);
    }

    #[test]
    fn counterexample_reports_nonzero_assumption_and_failed_split() {
        let m = counterexample_instance(&CMatrix::identity(1, 1)).unwrap();
        let report = m.verify_cone_decomposition(&tol()).unwrap();
        assert_eq!(report.assumption_dims, vec![0, 1, 0]);
        assert!(!report.decomposition_holds);
        assert!(report.cone_dims.iter().all(|&d| d == 0));
        assert_eq!(report.ker_dims, vec![0, 0, 0, 1]);
    }

    #[test]
    fn counterexample_random_invertible_m3() {
        let mut rng = rng_from_seed(99);
        let t1 = crate::random::random_unitary(3, &mut rng) * C::new(1.3, 0.4);
        let m = counterexample_instance(&t1).unwrap();
        let cone_dims = m.mapping_cone().cohomology(&tol()).unwrap().dims;
        assert!(cone_dims.iter().all(|&d| d == 0));
        let (ker, _) = m.kernel_complex(&tol());
        let dims = ker.cohomology(&tol()).unwrap().dims;
        assert_eq!(dims, vec![0, 0, 0, 3]);
    }

    #[test]
    fn report_serializes_with_declared_keys() {
        let m = counterexample_instance(&CMatrix::identity(1, 1)).unwrap();
        let report = m.verify_cone_decomposition(&tol()).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        for key in [
            "cone_dims",
            "ker_dims",
            "coker_dims",
            "assumption_dims",
            "indices",
            "decomposition_holds",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["indices"]["cone"], 0);
    }
}
