//! Seeded generators for property suites and batch experiments. Everything
//! is driven by ChaCha8 so runs are reproducible across platforms.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::complexes::FiniteComplex;
use crate::cones::ComplexMorphism;
use crate::numlin::{column_space_basis, CMatrix, TolPolicy};
use crate::toeplitz::ProjectedComplex;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// Haar-ish unitary via QR of a complex Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let qr = random_matrix(n, n, rng).qr();
    qr.q()
}

/// Random complex with the given graded dimensions: each differential is a
/// random matrix multiplied by the projector killing the image of the
/// previous one, so compositions vanish by construction. Differentials with
/// nearly degenerate nonzero singular values are resampled so rank decisions
/// in the property suites stay far from their thresholds.
pub fn random_complex(spaces: &[usize], rng: &mut ChaCha8Rng) -> FiniteComplex {
    let tol = TolPolicy::default();
    let mut differentials: Vec<CMatrix> = Vec::new();
    for j in 0..spaces.len() - 1 {
        let proj = match differentials.last() {
            None => CMatrix::identity(spaces[j], spaces[j]),
            Some(prev) => {
                let basis = column_space_basis(prev, &tol);
                CMatrix::identity(spaces[j], spaces[j]) - &basis * basis.adjoint()
            }
        };
        let mut a = random_matrix(spaces[j + 1], spaces[j], rng) * &proj;
        for _ in 0..64 {
            let d = crate::numlin::rank_tol(&a, &tol);
            let degenerate = d
                .singular_values
                .iter()
                .take(d.rank)
                .any(|&s| s < 1e-4 * d.singular_values[0]);
            if !degenerate {
                break;
            }
            a = random_matrix(spaces[j + 1], spaces[j], rng) * &proj;
        }
        differentials.push(a);
    }
    FiniteComplex::new(spaces.to_vec(), differentials).unwrap()
}

/// Invertible transform with condition number at most ~20, for building
/// non-Hermitian idempotents whose rank decisions stay well separated.
fn well_conditioned_transform(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    loop {
        let s = CMatrix::identity(n, n) + random_matrix(n, n, rng) * Complex64::new(0.4, 0.0);
        let sv = crate::numlin::rank_tol(&s, &TolPolicy::default()).singular_values;
        let min = sv.last().copied().unwrap_or(0.0);
        if min > 0.0 && sv[0] / min < 20.0 {
            return s;
        }
    }
}

/// Random idempotent of rank r on ℂⁿ, conjugated by a mildly non-normal
/// transform so it is genuinely non-Hermitian.
pub fn random_idempotent(n: usize, r: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    assert!(r <= n);
    let s = well_conditioned_transform(n, rng);
    let s_inv = s.clone().try_inverse().unwrap();
    let mut core = CMatrix::zeros(n, n);
    for i in 0..r {
        core[(i, i)] = Complex64::new(1.0, 0.0);
    }
    &s * core * &s_inv
}

/// Random projected complex: idempotents P_j of the given ranks together
/// with differentials compressed through them, composing to zero.
pub fn random_projected_complex(
    ambient: &[usize],
    ranks: &[usize],
    rng: &mut ChaCha8Rng,
) -> ProjectedComplex {
    assert_eq!(ambient.len(), ranks.len());
    let n = ambient.len();
    // P_j = C_j E_j with E_j C_j = I on the ranks.
    let mut cols: Vec<CMatrix> = Vec::new(); // im P_j basis (ambient × r)
    let mut rows: Vec<CMatrix> = Vec::new(); // left factor with rows·cols = I
    for j in 0..n {
        let s = well_conditioned_transform(ambient[j], rng);
        let s_inv = s.clone().try_inverse().unwrap();
        cols.push(s.columns(0, ranks[j]).into_owned());
        rows.push(s_inv.rows(0, ranks[j]).into_owned());
    }
    // Restricted complex on the rank dimensions.
    let restricted = random_complex(ranks, rng);
    let projections: Vec<CMatrix> = (0..n).map(|j| &cols[j] * &rows[j]).collect();
    let differentials: Vec<CMatrix> = (0..n - 1)
        .map(|j| &cols[j + 1] * &restricted.differentials()[j] * &rows[j])
        .collect();
    ProjectedComplex::new(
        FiniteComplex::new(ambient.to_vec(), differentials).unwrap(),
        projections,
    )
    .unwrap()
}

/// Random morphism with surjective verticals: the target complex is a
/// compression of the source built block-diagonally, then disguised by
/// unitaries on every space. Commuting squares hold by construction and
/// the assumption quotients are trivial.
pub fn random_surjective_morphism(
    target_spaces: &[usize],
    extra: &[usize],
    rng: &mut ChaCha8Rng,
) -> ComplexMorphism {
    assert_eq!(target_spaces.len(), extra.len());
    let n = target_spaces.len();
    let target = random_complex(target_spaces, rng);
    let kernel_part = random_complex(extra, rng);
    let source_spaces: Vec<usize> = (0..n).map(|j| target_spaces[j] + extra[j]).collect();

    // Source = block diag(target, kernel_part), verticals = [I 0].
    let mut source_diffs = Vec::new();
    for j in 0..n - 1 {
        let mut a = CMatrix::zeros(source_spaces[j + 1], source_spaces[j]);
        a.view_mut((0, 0), (target_spaces[j + 1], target_spaces[j]))
            .copy_from(&target.differentials()[j]);
        a.view_mut(
            (target_spaces[j + 1], target_spaces[j]),
            (extra[j + 1], extra[j]),
        )
        .copy_from(&kernel_part.differentials()[j]);
        source_diffs.push(a);
    }
    let mut verticals = Vec::new();
    for j in 0..n {
        let mut t = CMatrix::zeros(target_spaces[j], source_spaces[j]);
        t.view_mut((0, 0), (target_spaces[j], target_spaces[j]))
            .copy_from(&CMatrix::identity(target_spaces[j], target_spaces[j]));
        verticals.push(t);
    }

    // Disguise with unitaries U_j (source) and V_j (target).
    let us: Vec<CMatrix> = source_spaces.iter().map(|&m| random_unitary(m, rng)).collect();
    let vs: Vec<CMatrix> = target_spaces.iter().map(|&m| random_unitary(m, rng)).collect();
    let source_diffs: Vec<CMatrix> = (0..n - 1)
        .map(|j| &us[j + 1] * &source_diffs[j] * us[j].adjoint())
        .collect();
    let target_diffs: Vec<CMatrix> = (0..n - 1)
        .map(|j| &vs[j + 1] * &target.differentials()[j] * vs[j].adjoint())
        .collect();
    let verticals: Vec<CMatrix> = (0..n)
        .map(|j| &vs[j] * &verticals[j] * us[j].adjoint())
        .collect();

    ComplexMorphism::new(
        FiniteComplex::new(source_spaces, source_diffs).unwrap(),
        FiniteComplex::new(target_spaces.to_vec(), target_diffs).unwrap(),
        verticals,
    )
    .unwrap()
}

/// Uniformly random dimension vector for small property suites.
pub fn random_dims(len: usize, max_dim: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..len).map(|_| rng.random_range(1..=max_dim)).collect()
}
