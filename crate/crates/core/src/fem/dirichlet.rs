use std::collections::BTreeMap;

use crate::sparse::{SparseMatrix, TripletBuilder};

use super::FemError;

/// Set of constrained dofs with prescribed values, sorted by dof.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirichletBc {
    dofs: Vec<usize>,
    values: Vec<f64>,
}

impl DirichletBc {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from `(dof, value)` pairs. Repeated dofs must agree exactly.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self, FemError> {
        let mut map = BTreeMap::new();
        for (dof, value) in pairs {
            if let Some(&first) = map.get(&dof) {
                if first != value {
                    return Err(FemError::ConflictingDirichlet { dof, first, second: value });
                }
            }
            map.insert(dof, value);
        }
        let (dofs, values) = map.into_iter().unzip();
        Ok(Self { dofs, values })
    }

    /// Homogeneous constraint on `dofs`.
    pub fn homogeneous(dofs: impl IntoIterator<Item = usize>) -> Self {
        let mut d: Vec<usize> = dofs.into_iter().collect();
        d.sort_unstable();
        d.dedup();
        let values = vec![0.0; d.len()];
        Self { dofs: d, values }
    }

    /// Union of two constraint sets; shared dofs must agree.
    pub fn merge(&self, other: &DirichletBc) -> Result<Self, FemError> {
        Self::from_pairs(self.iter().chain(other.iter()))
    }

    /// Copy with every dof shifted by `offset`.
    pub fn shifted(&self, offset: usize) -> Self {
        Self { dofs: self.dofs.iter().map(|d| d + offset).collect(), values: self.values.clone() }
    }

    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.dofs.iter().copied().zip(self.values.iter().copied())
    }

    fn check(&self, size: usize) -> Result<(), FemError> {
        match self.dofs.last() {
            Some(&dof) if dof >= size => Err(FemError::DofOutOfRange { dof, size }),
            _ => Ok(()),
        }
    }

    fn mask(&self, size: usize) -> Vec<bool> {
        let mut m = vec![false; size];
        for &d in &self.dofs {
            m[d] = true;
        }
        m
    }
}

/// Replaces constrained rows and columns by the identity.
pub fn constrain_matrix(a: &SparseMatrix, bc: &DirichletBc) -> Result<SparseMatrix, FemError> {
    bc.check(a.nrows())?;
    bc.check(a.ncols())?;
    let mask = bc.mask(a.nrows().max(a.ncols()));
    let mut b = TripletBuilder::with_capacity(a.nrows(), a.ncols(), a.nnz());
    for i in 0..a.nrows() {
        if mask[i] {
            continue;
        }
        for (j, v) in a.row(i) {
            if !mask[j] {
                b.push(i, j, v);
            }
        }
    }
    for &d in bc.dofs() {
        b.push(d, d, 1.0);
    }
    Ok(b.build())
}

/// `rhs - A g` on free rows, prescribed values on constrained rows, where
/// `g` carries the prescribed values. `a` must be the unconstrained matrix.
pub fn lift_rhs(a: &SparseMatrix, rhs: &[f64], bc: &DirichletBc) -> Result<Vec<f64>, FemError> {
    if rhs.len() != a.nrows() {
        return Err(FemError::LengthMismatch { expected: a.nrows(), found: rhs.len() });
    }
    bc.check(a.ncols())?;
    let mut out = rhs.to_vec();
    if bc.values().iter().any(|v| *v != 0.0) {
        let mut g = vec![0.0; a.ncols()];
        for (d, v) in bc.iter() {
            g[d] = v;
        }
        let ag = a.spmv(&g)?;
        for (o, x) in out.iter_mut().zip(ag) {
            *o -= x;
        }
    }
    for (d, v) in bc.iter() {
        out[d] = v;
    }
    Ok(out)
}

/// Symmetric elimination of the constraints from `A x = rhs`.
pub fn apply_dirichlet(a: &SparseMatrix, rhs: &[f64], bc: &DirichletBc) -> Result<(SparseMatrix, Vec<f64>), FemError> {
    let r = lift_rhs(a, rhs, bc)?;
    Ok((constrain_matrix(a, bc)?, r))
}
