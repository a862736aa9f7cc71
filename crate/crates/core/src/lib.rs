//! Finite element solver for the time-dependent incompressible Boussinesq
//! equations on rectangles.
//!
//! The crate provides:
//! - [`mesh`]: structured triangulations and barycentric refinement,
//! - [`fem`]: P0/P1/P2 Lagrange spaces, quadrature and form assembly,
//! - [`sparse`]: CSR storage, saddle-point composition and direct solves,
//! - [`boussinesq`]: backward-Euler time stepping with no stabilization,
//!   classical grad-div stabilization, or the modular grad-div post-step,
//! - [`verify`]: manufactured solutions, space-time error norms and rate fits.

// `!(x > 0.0)` rejects NaN as well, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boussinesq;
pub mod fem;
pub mod mesh;
pub mod sparse;
pub mod verify;
