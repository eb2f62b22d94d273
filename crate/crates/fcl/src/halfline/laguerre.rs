//! Orthonormal Laguerre functions ℓ_k(r) = √2 L_k(2r) e^{−r} on L²(ℝ₊).
//! The derivative acts exactly on the truncated span: d/dr ℓ_k =
//! −ℓ_k − 2(ℓ_0 + … + ℓ_{k−1}), so the derivative matrix is triangular with
//! no discretization error, and e^{−r} is exactly ℓ_0/√2.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numlin::CMatrix;

#[derive(Debug, Clone, Copy)]
pub struct LaguerreBasis {
    truncation: usize,
}

impl LaguerreBasis {
    /// Basis spanning ℓ_0 .. ℓ_N.
    pub fn new(truncation: usize) -> Self {
        LaguerreBasis { truncation }
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.truncation + 1
    }

    /// Matrix of d/dr on the basis: D_{jk} = −1 for j = k, −2 for j < k,
    /// 0 for j > k. Exact.
    pub fn derivative_matrix(&self) -> CMatrix {
        let n = self.dim();
        CMatrix::from_fn(n, n, |j, k| {
            if j == k {
                Complex64::new(-1.0, 0.0)
            } else if j < k {
                Complex64::new(-2.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Evaluation at r = 0 as a row vector: ℓ_k(0) = √2 for every k.
    pub fn boundary_functional(&self) -> CMatrix {
        CMatrix::from_element(1, self.dim(), Complex64::new(std::f64::consts::SQRT_2, 0.0))
    }

    /// Coefficients of e^{−βr} in the basis: ⟨e^{−βr}, ℓ_k⟩ =
    /// √2 (β−1)^k / (β+1)^{k+1}, valid for Re β > 0.
    pub fn exp_coeffs(&self, beta: Complex64) -> Result<CMatrix> {
        if beta.re <= 0.0 {
            return Err(Error::DecayViolation { re_beta: beta.re });
        }
        let mut c = CMatrix::zeros(self.dim(), 1);
        let ratio = (beta - 1.0) / (beta + 1.0);
        let mut num = Complex64::new(std::f64::consts::SQRT_2, 0.0) / (beta + 1.0);
        for k in 0..self.dim() {
            c[(k, 0)] = num;
            num *= ratio;
        }
        Ok(c)
    }

    /// Pointwise evaluation of a coefficient vector, for quadrature oracles.
    pub fn eval(&self, coeffs: &CMatrix, r: f64) -> Complex64 {
        (0..self.dim())
            .map(|k| coeffs[(k, 0)] * laguerre_function(k, r))
            .sum()
    }
}

/// Laguerre polynomial L_k(x) by the three-term recurrence.
pub fn laguerre_polynomial(k: usize, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 - x;
    for m in 1..k {
        let next = ((2 * m + 1) as f64 - x) * cur - (m as f64) * prev;
        let next = next / (m + 1) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// ℓ_k(r) = √2 L_k(2r) e^{−r}.
pub fn laguerre_function(k: usize, r: f64) -> f64 {
    std::f64::consts::SQRT_2 * laguerre_polynomial(k, 2.0 * r) * (-r).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    #[test]
    fn derivative_matrix_is_exactly_triangular() {
        let basis = LaguerreBasis::new(5);
        let d = basis.derivative_matrix();
        for j in 0..6 {
            for k in 0..6 {
                let expected = if j == k {
                    -1.0
                } else if j < k {
                    -2.0
                } else {
                    0.0
                };
                assert_eq!(d[(j, k)], C::new(expected, 0.0));
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences_pointwise() {
        let basis = LaguerreBasis::new(8);
        let d = basis.derivative_matrix();
        // c = coefficients of ℓ_3; derivative evaluated via the matrix must
        // match a central difference of the function itself.
        let mut c = CMatrix::zeros(9, 1);
        c[(3, 0)] = C::new(1.0, 0.0);
        let dc = &d * &c;
        for r in [0.1, 0.7, 1.9, 3.4] {
            let h = 1e-6;
            let fd = (laguerre_function(3, r + h) - laguerre_function(3, r - h)) / (2.0 * h);
            let via_matrix = basis.eval(&dc, r);
            assert!(
                (via_matrix.re - fd).abs() < 1e-7,
                "r={r}: {via_matrix} vs {fd}"
            );
        }
    }

    #[test]
    fn basis_is_orthonormal_by_quadrature() {
        // Composite Simpson on [0, 60] resolves these integrands easily.
        let integrate = |f: &dyn Fn(f64) -> f64| {
            let n = 12_000;
            let h = 60.0 / n as f64;
            let mut s = f(0.0) + f(60.0);
            for i in 1..n {
                let x = i as f64 * h;
                s += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        for j in 0..4usize {
            for k in 0..4usize {
                let val = integrate(&|r| laguerre_function(j, r) * laguerre_function(k, r));
                let expected = if j == k { 1.0 } else { 0.0 };
                assert!((val - expected).abs() < 1e-10, "⟨ℓ_{j}, ℓ_{k}⟩ = {val}");
            }
        }
    }

    #[test]
    fn exp_coeffs_of_unit_rate_is_first_basis_vector() {
        let basis = LaguerreBasis::new(6);
        let c = basis.exp_coeffs(C::new(1.0, 0.0)).unwrap();
        assert!((c[(0, 0)] - C::new(1.0 / std::f64::consts::SQRT_2, 0.0)).norm() < 1e-15);
        for k in 1..7 {
            assert_eq!(c[(k, 0)], C::new(0.0, 0.0));
        }
    }

    #[test]
    fn exp_coeffs_match_adaptive_quadrature() {
        // Oracle: ⟨e^{−βr}, ℓ_k⟩ by direct numerical integration for
        // β ∈ {1, 1 ± 0.3i}.
        let basis = LaguerreBasis::new(10);
        let integrate = |f: &dyn Fn(f64) -> C| {
            let n = 20_000;
            let h = 60.0 / n as f64;
            let mut s = f(0.0) + f(60.0);
            for i in 1..n {
                let x = i as f64 * h;
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += f(x) * C::new(w, 0.0);
            }
            s * C::new(h / 3.0, 0.0)
        };
        for beta in [C::new(1.0, 0.0), C::new(1.0, 0.3), C::new(1.0, -0.3)] {
            let closed = basis.exp_coeffs(beta).unwrap();
            for k in 0..=10usize {
                let oracle = integrate(&|r| {
                    (C::new(0.0, 0.0) - beta * r).exp() * C::new(laguerre_function(k, r), 0.0)
                });
                assert!(
                    (closed[(k, 0)] - oracle).norm() < 1e-10,
                    "β={beta} k={k}: closed {c} vs quadrature {oracle}",
                    c = closed[(k, 0)]
                );
            }
        }
    }

    #[test]
    fn exp_coeffs_reject_nondecaying_exponent() {
        let basis = LaguerreBasis::new(4);
        match basis.exp_coeffs(C::new(-0.2, 1.0)) {
            Err(Error::DecayViolation { .. }) => {}
            other => panic!("expected decay-violation, got {other:?}"),
        }
    }

    #[test]
    fn boundary_functional_evaluates_at_zero() {
        let basis = LaguerreBasis::new(5);
        let g = basis.boundary_functional();
        let mut c = CMatrix::zeros(6, 1);
        c[(2, 0)] = C::new(1.0, 0.0);
        c[(4, 0)] = C::new(0.0, -2.0);
        let traced = (&g * &c)[(0, 0)];
        let direct = basis.eval(&c, 0.0);
        assert!((traced - direct).norm() < 1e-12);
    }
}
