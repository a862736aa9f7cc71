use std::sync::Arc;

use crate::sparse::DirectSolver;

use super::assembly::Assembler;
use super::dofmap::DofMap;
use super::field::DiscreteField;
use super::FemError;

/// Relative residual required of the projection solves.
pub const PROJECTION_TOL: f64 = 1e-12;

/// L2 projection of a scalar function onto the space of `d`.
pub fn l2_project_scalar(d: Arc<DofMap>, f: impl Fn(f64, f64) -> f64) -> Result<DiscreteField, FemError> {
    let asm = Assembler::EXACT;
    let solver = DirectSolver::factorize(asm.mass(&d))?;
    let (x, _) = solver.solve(&asm.load_scalar(&d, f), PROJECTION_TOL)?;
    DiscreteField::from_coeffs(d, 1, x)
}

/// Componentwise L2 projection of a vector function.
pub fn l2_project_vector(d: Arc<DofMap>, f: impl Fn(f64, f64) -> [f64; 2]) -> Result<DiscreteField, FemError> {
    let asm = Assembler::EXACT;
    let solver = DirectSolver::factorize(asm.mass(&d))?;
    let n = d.n_dofs();
    let load = asm.load_vector(&d, f);
    let (x0, _) = solver.solve(&load[..n], PROJECTION_TOL)?;
    let (x1, _) = solver.solve(&load[n..], PROJECTION_TOL)?;
    let mut coeffs = x0;
    coeffs.extend(x1);
    DiscreteField::from_coeffs(d, 2, coeffs)
}
