//! Boundary-symbol family of the Dolbeault complex on the unit ball of ℂ²:
//! per co-sphere point (z, ξ) the half-line operators
//! d₀u = ξu − izu′ and d₁v = ξ₂v₁ − ξ₁v₂ − i(z₂v₁′ − z₁v₂′), their
//! exactness scan over grids, and the potential-symbol column k₀ built from
//! v(z,ξ) = φ(z,ξ) ξ^⊥ e^{−ir/(z,ξ)} that repairs exactness near the skew
//! diagonal z = iξ.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::laguerre::LaguerreBasis;
use crate::error::{Error, Result};
use crate::numlin::{rank_tol, CMatrix, TolPolicy};

/// A point of the co-sphere bundle of S³ = ∂{|z| ≤ 1} ⊂ ℂ²:
/// |z| = 1, |ξ| = 1 and Re(ξ, z) = 0 in the Hermitian pairing.
#[derive(Debug, Clone, Copy)]
pub struct CospherePoint {
    z: [Complex64; 2],
    xi: [Complex64; 2],
}

fn herm(a: &[Complex64; 2], b: &[Complex64; 2]) -> Complex64 {
    a[0] * b[0].conj() + a[1] * b[1].conj()
}

fn norm2(a: &[Complex64; 2]) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr()).sqrt()
}

impl CospherePoint {
    pub fn new(z: [Complex64; 2], xi: [Complex64; 2]) -> Result<Self> {
        let nz = norm2(&z);
        let nxi = norm2(&xi);
        if (nz - 1.0).abs() > 1e-12 || (nxi - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPoint(format!(
                "|z| = {nz}, |ξ| = {nxi}; both must be 1"
            )));
        }
        let residual = herm(&xi, &z).re;
        if residual.abs() > 1e-12 {
            return Err(Error::InvalidPoint(format!(
                "Re(ξ,z) = {residual:e} violates the co-sphere constraint"
            )));
        }
        Ok(CospherePoint { z, xi })
    }

    /// The skew-diagonal point z = iξ over the given unit covector.
    pub fn skew(xi: [Complex64; 2]) -> Result<Self> {
        let i = Complex64::new(0.0, 1.0);
        CospherePoint::new([i * xi[0], i * xi[1]], xi)
    }

    pub fn z(&self) -> [Complex64; 2] {
        self.z
    }

    pub fn xi(&self) -> [Complex64; 2] {
        self.xi
    }

    /// (z, ξ) = z₁ξ̄₁ + z₂ξ̄₂; purely imaginary on the co-sphere.
    pub fn pairing(&self) -> Complex64 {
        herm(&self.z, &self.xi)
    }

    /// ξ^⊥ = (ξ̄₂, −ξ̄₁).
    pub fn xi_perp(&self) -> [Complex64; 2] {
        [self.xi[1].conj(), -self.xi[0].conj()]
    }

    /// |1 + i(z,ξ)|: zero exactly on the skew diagonal z = iξ.
    pub fn skew_distance(&self) -> f64 {
        (Complex64::new(1.0, 0.0) + Complex64::new(0.0, 1.0) * self.pairing()).norm()
    }
}

/// d₀(z,ξ): u ↦ ξu − izu′ as a 2(N+1) × (N+1) block column [ξ₁I − iz₁D; ξ₂I − iz₂D].
pub fn dolbeault_d0(p: &CospherePoint, truncation: usize) -> CMatrix {
    let basis = LaguerreBasis::new(truncation);
    let d = basis.derivative_matrix();
    let id = CMatrix::identity(basis.dim(), basis.dim());
    let i = Complex64::new(0.0, 1.0);
    let z = p.z();
    let xi = p.xi();
    let mut out = CMatrix::zeros(2 * basis.dim(), basis.dim());
    for comp in 0..2 {
        let block = &id * xi[comp] - &d * (i * z[comp]);
        out.view_mut((comp * basis.dim(), 0), (basis.dim(), basis.dim()))
            .copy_from(&block);
    }
    out
}

/// d₁(z,ξ): (v₁,v₂) ↦ ξ₂v₁ − ξ₁v₂ − i(z₂v₁′ − z₁v₂′) as an
/// (N+1) × 2(N+1) block row [ξ₂I − iz₂D, −ξ₁I + iz₁D].
pub fn dolbeault_d1(p: &CospherePoint, truncation: usize) -> CMatrix {
    let basis = LaguerreBasis::new(truncation);
    let d = basis.derivative_matrix();
    let id = CMatrix::identity(basis.dim(), basis.dim());
    let i = Complex64::new(0.0, 1.0);
    let z = p.z();
    let xi = p.xi();
    let mut out = CMatrix::zeros(basis.dim(), 2 * basis.dim());
    let first = &id * xi[1] - &d * (i * z[1]);
    let second = &d * (i * z[0]) - &id * xi[0];
    out.view_mut((0, 0), (basis.dim(), basis.dim())).copy_from(&first);
    out.view_mut((0, basis.dim()), (basis.dim(), basis.dim()))
        .copy_from(&second);
    out
}

/// Plateau bump: 1 on |t| ≤ 1/4, 0 on |t| ≥ 1/2, glued smoothly in between
/// with g(s) = h(s)/(h(s)+h(1−s)), h(s) = e^{−1/s}.
pub fn cutoff(t: f64) -> f64 {
    let a = t.abs();
    if a <= 0.25 {
        1.0
    } else if a >= 0.5 {
        0.0
    } else {
        let s = (0.5 - a) / 0.25;
        let h = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
        h(s) / (h(s) + h(1.0 - s))
    }
}

/// φ(z,ξ) = ϕ(1 + i(z,ξ)); the argument is real on the co-sphere.
pub fn cutoff_value(p: &CospherePoint) -> f64 {
    let arg = Complex64::new(1.0, 0.0) + Complex64::new(0.0, 1.0) * p.pairing();
    cutoff(arg.re)
}

/// Laguerre coefficients of v(z,ξ) = φ(z,ξ) ξ^⊥ e^{−βr} with β = i/(z,ξ),
/// as a 2(N+1) column. Zero wherever the cutoff vanishes; errors if the
/// exponential fails to decay on the cutoff support.
pub fn dolbeault_k0(p: &CospherePoint, truncation: usize) -> Result<CMatrix> {
    let basis = LaguerreBasis::new(truncation);
    let mut out = CMatrix::zeros(2 * basis.dim(), 1);
    let phi = cutoff_value(p);
    if phi == 0.0 {
        return Ok(out);
    }
    let beta = Complex64::new(0.0, 1.0) / p.pairing();
    if beta.re <= 0.0 {
        return Err(Error::DecayViolation { re_beta: beta.re });
    }
    let coeffs = basis.exp_coeffs(beta)?;
    let perp = p.xi_perp();
    for comp in 0..2 {
        let scaled = &coeffs * (perp[comp] * phi);
        out.view_mut((comp * basis.dim(), 0), (basis.dim(), 1))
            .copy_from(&scaled);
    }
    Ok(out)
}

/// d̃₀ = (d₀ k₀): the augmented first differential on H ⊕ ℂ.
pub fn augmented_d0(p: &CospherePoint, truncation: usize) -> Result<CMatrix> {
    let d0 = dolbeault_d0(p, truncation);
    let k0 = dolbeault_k0(p, truncation)?;
    let mut out = CMatrix::zeros(d0.nrows(), d0.ncols() + 1);
    out.view_mut((0, 0), (d0.nrows(), d0.ncols())).copy_from(&d0);
    out.view_mut((0, d0.ncols()), (d0.nrows(), 1)).copy_from(&k0);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiberClass {
    Exact,
    SkewDiagonalType,
    Marginal,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanFiber {
    pub point_id: usize,
    #[serde(skip)]
    pub point: CospherePoint,
    pub dims: (usize, usize, usize),
    pub class: FiberClass,
    pub marginal: bool,
    pub skew_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub fibers: Vec<ScanFiber>,
    pub skew_radius: f64,
    pub truncation: usize,
}

/// Truncation-stabilized cohomology dimensions of the fiber complex
/// 0 → ℂ^{N+1} → ℂ^{2(N+1)} → ℂ^{N+1} → 0 at one co-sphere point.
///
/// The kernels of d₀ and d₁ are exact in the truncation, but images shrink
/// by one degree wherever the symbol degenerates to ∂+1 (on the skew
/// diagonal), so images are read off the (N+1)-truncation through the
/// N-truncation window:
///   h₀ = dim ker d₀^{(N)},
///   h₁ = dim ker d₁^{(N)} − dim(im d₀^{(N+1)} ∩ V₁^{(N)}),
///   h₂ = N+1 − rank(Π_{V₂^{(N)}} d₁^{(N+1)}).
pub fn fiber_dims(
    p: &CospherePoint,
    truncation: usize,
    tol: &TolPolicy,
) -> ((usize, usize, usize), bool) {
    let n = truncation;
    let dim = n + 1;
    let d0 = dolbeault_d0(p, n);
    let d1 = dolbeault_d1(p, n);
    let d0_up = dolbeault_d0(p, n + 1);
    let d1_up = dolbeault_d1(p, n + 1);

    let mut marginal = false;
    let mut track = |d: &crate::numlin::RankDecision| -> usize {
        marginal |= d.marginal;
        d.rank
    };

    let rank_d0 = track(&rank_tol(&d0, tol));
    let h0 = dim - rank_d0;
    let ker_d1 = 2 * dim - track(&rank_tol(&d1, tol));

    // im d₀^{(N+1)} ∩ V₁^{(N)}: dim(A ∩ W) = dim A − rank of the rows of a
    // basis of A outside W. The dropped coordinates are mode N+1 in each of
    // the two components.
    let im_basis = crate::numlin::column_space_basis(&d0_up, tol);
    let r = im_basis.ncols();
    let mut outside = CMatrix::zeros(2, r);
    for c in 0..r {
        outside[(0, c)] = im_basis[(dim, c)]; // component 1, mode N+1
        outside[(1, c)] = im_basis[(2 * dim + 1, c)]; // component 2, mode N+1
    }
    let escape = track(&rank_tol(&outside, tol));
    let im_in_window = r - escape;
    let h1 = ker_d1.saturating_sub(im_in_window);

    // Surjectivity of d₁ through the window: drop the output mode N+1.
    let d1_window = d1_up.rows(0, dim).into_owned();
    let h2 = dim - track(&rank_tol(&d1_window, tol));

    ((h0, h1, h2), marginal)
}

/// Per-point cohomology dimensions over a grid, classified as exact,
/// skew-diagonal type (1,1,0) within the detection radius, or marginal.
pub fn exactness_scan(
    grid: &[CospherePoint],
    truncation: usize,
    tol: &TolPolicy,
    skew_radius: f64,
) -> ScanReport {
    let fibers: Vec<ScanFiber> = grid
        .par_iter()
        .enumerate()
        .map(|(point_id, p)| {
            let (dims, marginal) = fiber_dims(p, truncation, tol);
            let skew_distance = p.skew_distance();
            let class = if marginal {
                FiberClass::Marginal
            } else if dims == (0, 0, 0) {
                FiberClass::Exact
            } else if dims == (1, 1, 0) && skew_distance < skew_radius {
                FiberClass::SkewDiagonalType
            } else {
                FiberClass::Marginal
            };
            ScanFiber {
                point_id,
                point: *p,
                dims,
                class,
                marginal,
                skew_distance,
            }
        })
        .collect();
    ScanReport {
        fibers,
        skew_radius,
        truncation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng_from_seed;
    use num_complex::Complex64 as C;
    use rand::Rng;

    fn tol() -> TolPolicy {
        TolPolicy::new(1e-8)
    }

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    pub(super) fn random_cosphere_point(rng: &mut rand_chacha::ChaCha8Rng) -> CospherePoint {
        use rand_distr::{Distribution, StandardNormal};
        loop {
            let mut z = [
                c(StandardNormal.sample(rng), StandardNormal.sample(rng)),
                c(StandardNormal.sample(rng), StandardNormal.sample(rng)),
            ];
            let nz = (z[0].norm_sqr() + z[1].norm_sqr()).sqrt();
            z = [z[0] / nz, z[1] / nz];
            let mut w = [
                c(StandardNormal.sample(rng), StandardNormal.sample(rng)),
                c(StandardNormal.sample(rng), StandardNormal.sample(rng)),
            ];
            // Remove the component violating Re(ξ,z) = 0, then normalize.
            let f = (w[0] * z[0].conj() + w[1] * z[1].conj()).re;
            w = [w[0] - z[0] * f, w[1] - z[1] * f];
            let nw = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
            if nw < 1e-6 {
                continue;
            }
            let xi = [w[0] / nw, w[1] / nw];
            if let Ok(p) = CospherePoint::new(z, xi) {
                return p;
            }
        }
    }

    #[test]
    fn constraint_violations_are_rejected() {
        assert!(CospherePoint::new(
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(1.0, 0.0), c(0.0, 0.0)]
        )
        .is_err());
        assert!(CospherePoint::new(
            [c(2.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(1.0, 0.0)]
        )
        .is_err());
    }

    #[test]
    fn composition_vanishes_identically() {
        let mut rng = rng_from_seed(1);
        for _ in 0..10 {
            let p = random_cosphere_point(&mut rng);
            let n = 3 + rng.random_range(0..8);
            let prod = dolbeault_d1(&p, n) * dolbeault_d0(&p, n);
            let max = prod.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(max <= 1e-14, "d₁d₀ = {max:e}");
        }
    }

    #[test]
    fn skew_point_kernel_is_the_exponential_line() {
        let p = CospherePoint::skew([c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let d0 = dolbeault_d0(&p, 12);
        let k = crate::numlin::kernel_basis(&d0, &tol());
        assert_eq!(k.ncols(), 1);
        assert!((k[(0, 0)].norm() - 1.0).abs() < 1e-10, "kernel is ℓ₀");
    }

    #[test]
    fn generic_point_has_trivial_kernel_and_exact_fiber() {
        let p = CospherePoint::new([c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        let (dims, marginal) = fiber_dims(&p, 16, &tol());
        assert_eq!(dims, (0, 0, 0));
        assert!(!marginal);
    }

    #[test]
    fn skew_point_dims_are_one_one_zero() {
        let mut rng = rng_from_seed(4);
        for _ in 0..5 {
            let q = random_cosphere_point(&mut rng);
            let p = CospherePoint::skew(q.xi()).unwrap();
            let (dims, _) = fiber_dims(&p, 16, &tol());
            assert_eq!(dims, (1, 1, 0), "ξ = {:?}", q.xi());
        }
    }

    #[test]
    fn cutoff_is_a_plateau_bump() {
        assert_eq!(cutoff(0.0), 1.0);
        assert_eq!(cutoff(0.2), 1.0);
        assert_eq!(cutoff(0.5), 0.0);
        assert_eq!(cutoff(0.8), 0.0);
        let mid = cutoff(0.375);
        assert!(mid > 0.0 && mid < 1.0);
        assert_eq!(cutoff(1.0 / 4.0 + 1e-9), cutoff(-(1.0 / 4.0 + 1e-9)));
    }

    #[test]
    fn potential_column_at_skew_is_the_perp_exponential() {
        let xi = [c(0.0, 0.0), c(1.0, 0.0)];
        let p = CospherePoint::skew(xi).unwrap();
        assert_eq!(cutoff_value(&p), 1.0);
        let k0 = dolbeault_k0(&p, 8).unwrap();
        // v(iξ,ξ) = ξ^⊥ e^{−r}: component 1 direction ξ̄₂ = 1 on ℓ₀/√2.
        assert!((k0[(0, 0)] - c(1.0 / std::f64::consts::SQRT_2, 0.0)).norm() < 1e-12);
        for j in 1..9 {
            assert!(k0[(j, 0)].norm() < 1e-14);
        }
        // Component 2 direction −ξ̄₁ = 0.
        for j in 9..18 {
            assert!(k0[(j, 0)].norm() < 1e-14);
        }
    }

    #[test]
    fn potential_column_vanishes_far_from_skew_diagonal() {
        let p = CospherePoint::new([c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        assert_eq!(cutoff_value(&p), 0.0);
        let k0 = dolbeault_k0(&p, 8).unwrap();
        assert!(k0.iter().all(|z| z.norm() == 0.0));
        // With k₀ = 0 the augmented kernel contains the bare ℂ-direction.
        let aug = augmented_d0(&p, 8).unwrap();
        let k = crate::numlin::kernel_basis(&aug, &tol());
        assert_eq!(k.ncols(), 1);
        assert!((k[(aug.ncols() - 1, 0)].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn potential_column_lies_in_the_kernel_of_d1_inside_the_cutoff() {
        // Points near (but not on) the skew diagonal where φ > 0.
        let mut rng = rng_from_seed(9);
        let mut tested = 0;
        while tested < 5 {
            let q = random_cosphere_point(&mut rng);
            let xi = q.xi();
            // Perturb the skew point slightly along the fiber sphere.
            let t: f64 = rng.random_range(-0.15..0.15);
            let z = [
                (c(0.0, 1.0) * xi[0] * c((1.0 - t * t).sqrt(), 0.0)
                    + c(t, 0.0) * xi[1].conj()),
                (c(0.0, 1.0) * xi[1] * c((1.0 - t * t).sqrt(), 0.0)
                    - c(t, 0.0) * xi[0].conj()),
            ];
            let nz = (z[0].norm_sqr() + z[1].norm_sqr()).sqrt();
            let z = [z[0] / nz, z[1] / nz];
            let Ok(p) = CospherePoint::new(z, xi) else { continue };
            if cutoff_value(&p) == 0.0 {
                continue;
            }
            let n = 24;
            let k0 = dolbeault_k0(&p, n).unwrap();
            let d1 = dolbeault_d1(&p, n);
            let residual = crate::numlin::op_norm(&(d1 * k0));
            assert!(residual <= 1e-10, "d₁ v = {residual:e} at gap {}", p.skew_distance());
            tested += 1;
        }
    }

    #[test]
    fn scan_classifies_generic_and_skew_fibers() {
        let mut rng = rng_from_seed(11);
        let mut grid = Vec::new();
        for _ in 0..20 {
            let p = random_cosphere_point(&mut rng);
            if p.skew_distance() >= 0.3 {
                grid.push(p);
            }
        }
        let generic_count = grid.len();
        for _ in 0..4 {
            let q = random_cosphere_point(&mut rng);
            grid.push(CospherePoint::skew(q.xi()).unwrap());
        }
        let report = exactness_scan(&grid, 16, &tol(), 0.05);
        for (i, fiber) in report.fibers.iter().enumerate() {
            if i < generic_count {
                assert_eq!(fiber.class, FiberClass::Exact, "fiber {i}");
            } else {
                assert_eq!(fiber.class, FiberClass::SkewDiagonalType, "fiber {i}");
            }
            assert_eq!(fiber.dims.2, 0, "h₂ must vanish everywhere");
        }
    }
}
