//! The boundary symbol of the Cauchy–Riemann operator on the disc:
//! −½ e^{iθ}(∂_t + τ) on the half-line, τ = ±1, in the Laguerre truncation.
//! At τ = +1 the kernel is exactly the ℓ_0 direction (the e^{−t} line);
//! at τ = −1 the truncation is bijective.

use num_complex::Complex64;

use super::laguerre::LaguerreBasis;
use crate::error::{Error, Result};
use crate::numlin::{kernel_basis, op_norm, rank_tol, rank_tol_anchored, CMatrix, TolPolicy};

#[derive(Debug, Clone)]
pub struct CrBoundarySymbol {
    pub tau: i8,
    /// −½(D + τ·I); the angular factor e^{iθ} is carried separately.
    pub matrix: CMatrix,
    /// Power of e^{iθ} multiplying the matrix part.
    pub angular_phase: i64,
    pub kernel: CMatrix,
    pub kernel_dim: usize,
    /// Surjectivity, stabilized against the truncation edge: the symbol at
    /// truncation N+1, projected back onto the N-truncation, must have full
    /// rank. The raw truncation of ∂_t + 1 misses the top basis function
    /// only because its image drops the polynomial degree by one.
    pub surjective: bool,
    /// γ₀ applied to the kernel basis columns.
    pub kernel_traces: Vec<Complex64>,
}

fn symbol_matrix(tau: i8, truncation: usize) -> CMatrix {
    let basis = LaguerreBasis::new(truncation);
    let d = basis.derivative_matrix();
    let id = CMatrix::identity(basis.dim(), basis.dim());
    (d + id * Complex64::new(tau as f64, 0.0)) * Complex64::new(-0.5, 0.0)
}

pub fn cr_boundary_symbol(tau: i8, truncation: usize, tol: &TolPolicy) -> Result<CrBoundarySymbol> {
    if tau != 1 && tau != -1 {
        return Err(Error::InvalidPoint(format!("τ must be ±1, got {tau}")));
    }
    let basis = LaguerreBasis::new(truncation);
    let matrix = symbol_matrix(tau, truncation);
    let anchor = Some(op_norm(&matrix));
    let kernel = kernel_basis(&matrix, tol);
    let kernel_dim = basis.dim() - rank_tol_anchored(&matrix, anchor, tol).rank;

    // One-level stabilization: rank of the (N+1)-truncation seen through
    // the N-truncation window.
    let bigger = symbol_matrix(tau, truncation + 1);
    let window = bigger.rows(0, basis.dim()).into_owned();
    let surjective = rank_tol(&window, tol).rank == basis.dim();

    let gamma = basis.boundary_functional();
    let kernel_traces = (0..kernel.ncols())
        .map(|c| (&gamma * kernel.column(c).into_owned())[(0, 0)])
        .collect();

    Ok(CrBoundarySymbol {
        tau,
        matrix,
        angular_phase: 1,
        kernel,
        kernel_dim,
        surjective,
        kernel_traces,
    })
}
