//! Desk-scale lab for Fredholm complexes of operators: finite Hilbert-space
//! complexes and their Hodge theory, mapping cones, projected (Toeplitz)
//! complexes and their lifting, a truncated operator algebra on the circle,
//! and Laguerre-truncated boundary-symbol families on the half-line with
//! kernel-bundle clutching.

pub mod circle;
pub mod complexes;
pub mod cones;
pub mod error;
pub mod experiments;
pub mod halfline;
pub mod numlin;
pub mod output;
pub mod random;
pub mod toeplitz;

pub use error::{Error, Result};
pub use numlin::{CMatrix, TolPolicy};
