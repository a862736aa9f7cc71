//! Backward-Euler time stepping for the Boussinesq system.
//!
//! Each step solves the velocity/pressure saddle system with convection and
//! buoyancy lagged at level `n`, then the temperature equation with the same
//! advecting field. In [`StabilizationMode::Modular`] a grad-div correction
//!
//! ```text
//! (u, phi) + (beta + gamma dt)(div u, div phi) = (u~, phi) + beta (div u^n, div phi)
//! ```
//!
//! follows. Its matrix is constant and factored once.

mod config;
mod solver;

pub use config::{SolverConfig, StabilizationMode};
pub use solver::{energy_identity_terms, EnergyIdentity, ProblemData, Solver, State, StepReport, ZeroData};

use thiserror::Error;

use crate::fem::FemError;
use crate::sparse::SparseError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoussinesqError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error("non-finite {quantity} at step {step}")]
    NonFinite { step: usize, quantity: &'static str },
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<BoussinesqError>,
    },
}
