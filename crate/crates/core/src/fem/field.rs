use std::sync::Arc;

use super::dofmap::DofMap;
use super::FemError;

/// Finite element function: coefficients over a scalar dof map, with
/// `components` copies stored component-blocked.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    dofmap: Arc<DofMap>,
    components: usize,
    coeffs: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(dofmap: Arc<DofMap>, components: usize) -> Self {
        let n = dofmap.n_dofs() * components;
        Self { dofmap, components, coeffs: vec![0.0; n] }
    }

    pub fn from_coeffs(dofmap: Arc<DofMap>, components: usize, coeffs: Vec<f64>) -> Result<Self, FemError> {
        let expected = dofmap.n_dofs() * components;
        if coeffs.len() != expected {
            return Err(FemError::LengthMismatch { expected, found: coeffs.len() });
        }
        Ok(Self { dofmap, components, coeffs })
    }

    /// Nodal interpolant of a scalar function.
    pub fn interpolate_scalar(dofmap: Arc<DofMap>, f: impl Fn(f64, f64) -> f64) -> Self {
        let coeffs = dofmap.dof_coords().iter().map(|p| f(p[0], p[1])).collect();
        Self { dofmap, components: 1, coeffs }
    }

    /// Nodal interpolant of a vector function.
    pub fn interpolate_vector(dofmap: Arc<DofMap>, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let n = dofmap.n_dofs();
        let mut coeffs = vec![0.0; 2 * n];
        for (i, p) in dofmap.dof_coords().iter().enumerate() {
            let v = f(p[0], p[1]);
            coeffs[i] = v[0];
            coeffs[n + i] = v[1];
        }
        Self { dofmap, components: 2, coeffs }
    }

    pub fn dofmap(&self) -> &Arc<DofMap> {
        &self.dofmap
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.dofmap.n_dofs();
        &self.coeffs[c * n..(c + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|v| v.is_finite())
    }

    /// Sum over the local basis of component `c` on triangle `t`, weighted by
    /// tabulated values `basis`.
    #[inline]
    pub fn local_combination(&self, c: usize, t: usize, basis: &[f64]) -> f64 {
        let comp = self.component(c);
        self.dofmap.cell(t).iter().zip(basis).map(|(&g, b)| comp[g] * b).sum()
    }
}
