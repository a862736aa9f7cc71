//! Manufactured solutions, space-time error norms and convergence rates.

mod manufactured;
mod norms;
mod rates;

pub use manufactured::{max_pde_residual, pde_residual, ManufacturedSolution, PressureField};
pub use norms::{spatial_errors, SpaceTimeNorm, SpatialErrors};
pub use rates::{fit_rates, format_rate, NO_RATE};

use thiserror::Error;

/// Tolerance of the finite-difference forcing oracle.
pub const FORCING_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("snapshot {expected} missing (got {found})")]
    MissingSnapshot { expected: usize, found: usize },
    #[error("error {index} is not positive: {value}")]
    NonPositiveError { index: usize, value: f64 },
    #[error("vector has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("forcing residual {residual:e} exceeds {tol:e}")]
    ForcingResidual { residual: f64, tol: f64 },
}

/// Runs the forcing oracle at `n_points` space-time points and fails if any
/// residual exceeds [`FORCING_TOL`]. Returns the largest residual.
pub fn check_forcing(ms: &ManufacturedSolution, n_points: usize, t_max: f64, seed: u64) -> Result<f64, VerifyError> {
    let residual = max_pde_residual(ms, n_points, t_max, seed);
    if residual <= FORCING_TOL {
        Ok(residual)
    } else {
        Err(VerifyError::ForcingResidual { residual, tol: FORCING_TOL })
    }
}
