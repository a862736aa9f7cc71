//! Lagrange finite elements on triangle meshes: quadrature, P0/P1/P2 bases,
//! dof numbering, form assembly, Dirichlet elimination and L2 projection.

mod assembly;
mod dirichlet;
mod dofmap;
mod element;
mod field;
mod projection;
mod quadrature;

pub use assembly::{
    assemble_buoyancy, assemble_convection_skew, assemble_divergence, assemble_graddiv, assemble_mass,
    assemble_stiffness, divergence_l2, vector_block, Assembler, DATA_DEGREE,
};
pub use dirichlet::{apply_dirichlet, constrain_matrix, lift_rhs, DirichletBc};
pub use dofmap::DofMap;
pub use element::{AffineMap, ElementKind, ElementPair, Tabulation};
pub use field::DiscreteField;
pub use projection::{l2_project_scalar, l2_project_vector, PROJECTION_TOL};
pub use quadrature::{gauss_legendre_unit, quadrature_rule, QuadratureRule, MAX_DEGREE};

use thiserror::Error;

use crate::sparse::SparseError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("no quadrature rule of degree {degree} (supported: 1..={max})", max = MAX_DEGREE)]
    UnsupportedQuadrature { degree: usize },
    #[error("coefficient vector has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("field has {found} components, expected {expected}")]
    ComponentMismatch { expected: usize, found: usize },
    #[error("dof maps are defined on different meshes")]
    MeshMismatch,
    #[error("coefficient must be positive and finite, got {0}")]
    NonPositiveCoefficient(f64),
    #[error("dof {dof} out of range for a system of size {size}")]
    DofOutOfRange { dof: usize, size: usize },
    #[error("dof {dof} constrained to both {first} and {second}")]
    ConflictingDirichlet { dof: usize, first: f64, second: f64 },
    #[error(transparent)]
    Solve(#[from] SparseError),
}
