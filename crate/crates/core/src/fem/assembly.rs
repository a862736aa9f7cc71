//! Assembly of the bilinear and trilinear forms of the time-stepping scheme.
//!
//! Scalar forms act on a single [`DofMap`]. Vector forms use two
//! component-blocked copies: global index `c * n + i` for component `c`.
//! Quadrature degrees are chosen so every integrand with polynomial data
//! is integrated exactly on affine triangles.

use crate::sparse::{SparseMatrix, TripletBuilder};

use super::dofmap::DofMap;
use super::element::{AffineMap, Tabulation};
use super::field::DiscreteField;
use super::quadrature::{quadrature_rule, QuadratureRule, MAX_DEGREE};
use super::FemError;

/// Quadrature degree used for non-polynomial data (loads, errors).
pub const DATA_DEGREE: usize = MAX_DEGREE;

/// Form assembler. `boost` raises every quadrature degree above the exact
/// minimum, which is only useful for cross-checks.
#[derive(Debug, Clone, Copy, Default)]
pub struct Assembler {
    boost: usize,
}

impl Assembler {
    pub const EXACT: Assembler = Assembler { boost: 0 };

    pub fn with_boost(boost: usize) -> Self {
        Self { boost }
    }

    fn rule(&self, degree: usize) -> QuadratureRule {
        let d = (degree + self.boost).clamp(1, MAX_DEGREE);
        quadrature_rule(d).expect("degree clamped to the supported range")
    }

    /// Scalar mass matrix `M_ij = (phi_j, phi_i)`.
    pub fn mass(&self, d: &DofMap) -> SparseMatrix {
        let rule = self.rule(2 * d.kind().degree());
        let tab = Tabulation::new(d.kind(), &rule);
        let n = d.n_local();
        let mesh = d.mesh();
        let mut b = TripletBuilder::with_capacity(d.n_dofs(), d.n_dofs(), mesh.n_triangles() * n * n);
        let mut local = vec![0.0; n * n];
        for t in 0..mesh.n_triangles() {
            let map = AffineMap::new(&mesh.triangle_coords(t));
            local.fill(0.0);
            for q in 0..rule.len() {
                let w = rule.weights[q] * map.det.abs();
                let v = tab.values_at(q);
                for i in 0..n {
                    for j in 0..n {
                        local[i * n + j] += w * (v[i] * v[j]);
                    }
                }
            }
            scatter(&mut b, d.cell(t), d.cell(t), 0, 0, &local);
        }
        b.build()
    }

    /// Scalar stiffness matrix `K_ij = c (grad phi_j, grad phi_i)`.
    pub fn stiffness(&self, d: &DofMap, coefficient: f64) -> Result<SparseMatrix, FemError> {
        if !(coefficient > 0.0) || !coefficient.is_finite() {
            return Err(FemError::NonPositiveCoefficient(coefficient));
        }
        let deg = d.kind().degree();
        let rule = self.rule(2 * deg.saturating_sub(1));
        let tab = Tabulation::new(d.kind(), &rule);
        let n = d.n_local();
        let mesh = d.mesh();
        let mut b = TripletBuilder::with_capacity(d.n_dofs(), d.n_dofs(), mesh.n_triangles() * n * n);
        let mut local = vec![0.0; n * n];
        let mut g = vec![[0.0; 2]; n];
        for t in 0..mesh.n_triangles() {
            let map = AffineMap::new(&mesh.triangle_coords(t));
            local.fill(0.0);
            for q in 0..rule.len() {
                let w = coefficient * rule.weights[q] * map.det.abs();
                for (gi, r) in g.iter_mut().zip(tab.ref_grads_at(q)) {
                    *gi = map.grad(*r);
                }
                for i in 0..n {
                    for j in 0..n {
                        local[i * n + j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    }
                }
            }
            scatter(&mut b, d.cell(t), d.cell(t), 0, 0, &local);
        }
        Ok(b.build())
    }

    /// Divergence matrix `B_{q,(c,j)} = (q, d_c phi_j)` with rows indexed by
    /// pressure dofs and columns by component-blocked velocity dofs.
    pub fn divergence(&self, vel: &DofMap, pres: &DofMap) -> Result<SparseMatrix, FemError> {
        if !vel.same_mesh(pres) {
            return Err(FemError::MeshMismatch);
        }
        let rule = self.rule(pres.kind().degree() + vel.kind().degree().saturating_sub(1));
        let tv = Tabulation::new(vel.kind(), &rule);
        let tp = Tabulation::new(pres.kind(), &rule);
        let (nv, np) = (vel.n_local(), pres.n_local());
        let nvel = vel.n_dofs();
        let mesh = vel.mesh();
        let mut b = TripletBuilder::with_capacity(pres.n_dofs(), 2 * nvel, mesh.n_triangles() * 2 * nv * np);
        let mut lx = vec![0.0; np * nv];
        let mut ly = vec![0.0; np * nv];
        for t in 0..mesh.n_triangles() {
            let map = AffineMap::new(&mesh.triangle_coords(t));
            lx.fill(0.0);
            ly.fill(0.0);
            for q in 0..rule.len() {
                let w = rule.weights[q] * map.det.abs();
                let pv = tp.values_at(q);
                let rg = tv.ref_grads_at(q);
                for j in 0..nv {
                    let g = map.grad(rg[j]);
                    for i in 0..np {
                        lx[i * nv + j] += w * pv[i] * g[0];
                        ly[i * nv + j] += w * pv[i] * g[1];
                    }
                }
            }
            scatter(&mut b, pres.cell(t), vel.cell(t), 0, 0, &lx);
            scatter(&mut b, pres.cell(t), vel.cell(t), 0, nvel, &ly);
        }
        Ok(b.build())
    }

    /// Grad-div matrix `G` with `w^T G v = (div w, div v)` on the vector space.
    pub fn graddiv(&self, vel: &DofMap) -> SparseMatrix {
        let rule = self.rule(2 * vel.kind().degree().saturating_sub(1));
        let tab = Tabulation::new(vel.kind(), &rule);
        let n = vel.n_local();
        let nd = vel.n_dofs();
        let mesh = vel.mesh();
        let mut b = TripletBuilder::with_capacity(2 * nd, 2 * nd, mesh.n_triangles() * 4 * n * n);
        let mut blocks = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
        let mut g = vec![[0.0; 2]; n];
        for t in 0..mesh.n_triangles() {
            let map = AffineMap::new(&mesh.triangle_coords(t));
            blocks.iter_mut().for_each(|blk| blk.fill(0.0));
            for q in 0..rule.len() {
                let w = rule.weights[q] * map.det.abs();
                for (gi, r) in g.iter_mut().zip(tab.ref_grads_at(q)) {
                    *gi = map.grad(*r);
                }
                for i in 0..n {
                    for j in 0..n {
                        // block (a, c): test component a, trial component c
                        for a in 0..2 {
                            for c in 0..2 {
                                blocks[2 * a + c][i * n + j] += w * (g[i][a] * g[j][c]);
                            }
                        }
                    }
                }
            }
            let cell = vel.cell(t);
            for a in 0..2 {
                for c in 0..2 {
                    scatter(&mut b, cell, cell, a * nd, c * nd, &blocks[2 * a + c]);
                }
            }
        }
        b.build()
    }

    /// Skew-symmetric convection matrix `C` with
    /// `v^T C w = 1/2 ((a . grad w, v) - (a . grad v, w))` for the advecting
    /// vector field `a`. Rows are test dofs, columns trial dofs.
    pub fn convection(&self, advecting: &DiscreteField, trial: &DofMap, test: &DofMap) -> Result<SparseMatrix, FemError> {
        let adv = advecting.dofmap();
        if advecting.components() != 2 {
            return Err(FemError::ComponentMismatch { expected: 2, found: advecting.components() });
        }
        if !adv.same_mesh(trial) || !adv.same_mesh(test) {
            return Err(FemError::MeshMismatch);
        }
        let da = adv.kind().degree();
        let (dt, ds) = (trial.kind().degree(), test.kind().degree());
        let degree = (da + dt.saturating_sub(1) + ds).max(da + ds.saturating_sub(1) + dt);
        let rule = self.rule(degree);
        let ta = Tabulation::new(adv.kind(), &rule);
        let tt = Tabulation::new(trial.kind(), &rule);
        let ts = Tabulation::new(test.kind(), &rule);
        let (nt_loc, ns_loc) = (trial.n_local(), test.n_local());
        let mesh = adv.mesh();
        let mut b = TripletBuilder::with_capacity(test.n_dofs(), trial.n_dofs(), mesh.n_triangles() * nt_loc * ns_loc);
        let mut local = vec![0.0; ns_loc * nt_loc];
        // a . grad(phi) for trial and test functions at one point
        let mut adv_trial = vec![0.0; nt_loc];
        let mut adv_test = vec![0.0; ns_loc];
        for t in 0..mesh.n_triangles() {
            let map = AffineMap::new(&mesh.triangle_coords(t));
            local.fill(0.0);
            for q in 0..rule.len() {
                let w = 0.5 * rule.weights[q] * map.det.abs();
                let av = ta.values_at(q);
                let a = [advecting.local_combination(0, t, av), advecting.local_combination(1, t, av)];
                if a[0] == 0.0 && a[1] == 0.0 {
                    continue;
                }
                for (out, r) in adv_trial.iter_mut().zip(tt.ref_grads_at(q)) {
                    let g = map.grad(*r);
                    *out = a[0] * g[0] + a[1] * g[1];
                }
                for (out, r) in adv_test.iter_mut().zip(ts.ref_grads_at(q)) {
                    let g = map.grad(*r);
                    *out = a[0] * g[0] + a[1] * g[1];
                }
                let (vt, vs) = (tt.values_at(q), ts.values_at(q));
                for i in 0..ns_loc {
                    for j in 0..nt_loc {
                        local[i * nt_loc + j] += w * (adv_trial[j] * vs[i] - adv_test[i] * vt[j]);
                    }
                }
            }
            scatter(&mut b, test.cell(t), trial.cell(t), 0, 0, &local);
        }
        Ok(b.build())
    }

    /// Buoyancy load `Ri (theta, v_y)` on the vector velocity space; the
    /// x-component block is zero.
    pub fn buoyancy(&self, theta: &DiscreteField, vel: &DofMap, ri: f64) -> Result<Vec<f64>, FemError> {
        let td = theta.dofmap();
        if theta.components() != 1 {
            return Err(FemError::ComponentMismatch { expected: 1, found: theta.components() });
        }
        if !td.same_mesh(vel) {
            return Err(FemError::MeshMismatch);
        }
        let nd = vel.n_dofs();
        let mut out = vec![0.0; 2 * nd];
        if ri == 0.0 {
            return Ok(out);
        }
        let rule = self.rule(td.kind().degree() + vel.kind().degree());
        let tt = Tabulation::new(td.kind(), &rule);
        let tv = Tabulation::new(vel.kind(), &rule);
        let mesh = vel.mesh();
        for t in 0..mesh.n_triangles() {
            let map = AffineMap::new(&mesh.triangle_coords(t));
            let cell = vel.cell(t);
            for q in 0..rule.len() {
                let th = theta.local_combination(0, t, tt.values_at(q));
                let w = ri * th * rule.weights[q] * map.det.abs();
                for (&g, v) in cell.iter().zip(tv.values_at(q)) {
                    out[nd + g] += w * v;
                }
            }
        }
        Ok(out)
    }

    /// Load vector `(f, phi_i)` for a scalar function.
    pub fn load_scalar(&self, d: &DofMap, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let rule = self.rule(DATA_DEGREE);
        let tab = Tabulation::new(d.kind(), &rule);
        let mesh = d.mesh();
        let mut out = vec![0.0; d.n_dofs()];
        for t in 0..mesh.n_triangles() {
            let map = AffineMap::new(&mesh.triangle_coords(t));
            for q in 0..rule.len() {
                let x = map.map(rule.points[q]);
                let w = f(x[0], x[1]) * rule.weights[q] * map.det.abs();
                for (&g, v) in d.cell(t).iter().zip(tab.values_at(q)) {
                    out[g] += w * v;
                }
            }
        }
        out
    }

    /// Load vector `(f, phi)` for a vector function, component-blocked.
    pub fn load_vector(&self, d: &DofMap, f: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
        let rule = self.rule(DATA_DEGREE);
        let tab = Tabulation::new(d.kind(), &rule);
        let mesh = d.mesh();
        let nd = d.n_dofs();
        let mut out = vec![0.0; 2 * nd];
        for t in 0..mesh.n_triangles() {
            let map = AffineMap::new(&mesh.triangle_coords(t));
            for q in 0..rule.len() {
                let x = map.map(rule.points[q]);
                let val = f(x[0], x[1]);
                let w = rule.weights[q] * map.det.abs();
                for (&g, v) in d.cell(t).iter().zip(tab.values_at(q)) {
                    out[g] += w * val[0] * v;
                    out[nd + g] += w * val[1] * v;
                }
            }
        }
        out
    }
}

fn scatter(b: &mut TripletBuilder, rows: &[usize], cols: &[usize], row_off: usize, col_off: usize, local: &[f64]) {
    let nc = cols.len();
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            b.push(row_off + r, col_off + c, local[i * nc + j]);
        }
    }
}

/// `diag(m, m)`: lifts a scalar operator to the component-blocked vector space.
pub fn vector_block(m: &SparseMatrix) -> SparseMatrix {
    SparseMatrix::block(&[vec![Some(m), None], vec![None, Some(m)]]).expect("square diagonal blocks")
}

pub fn assemble_mass(d: &DofMap) -> SparseMatrix {
    Assembler::EXACT.mass(d)
}

pub fn assemble_stiffness(d: &DofMap, coefficient: f64) -> Result<SparseMatrix, FemError> {
    Assembler::EXACT.stiffness(d, coefficient)
}

pub fn assemble_divergence(vel: &DofMap, pres: &DofMap) -> Result<SparseMatrix, FemError> {
    Assembler::EXACT.divergence(vel, pres)
}

pub fn assemble_graddiv(vel: &DofMap) -> SparseMatrix {
    Assembler::EXACT.graddiv(vel)
}

/// `||div u||_{L2}` of a component-blocked vector field, summed cell by
/// cell. Unlike `sqrt(u^T G u)` this keeps its accuracy when the
/// divergence is many orders below the gradient.
pub fn divergence_l2(vel: &DofMap, u: &[f64]) -> f64 {
    let rule = quadrature_rule(2 * vel.kind().degree().saturating_sub(1)).expect("supported degree");
    let tab = Tabulation::new(vel.kind(), &rule);
    let nd = vel.n_dofs();
    let mesh = vel.mesh();
    let mut acc = 0.0;
    for t in 0..mesh.n_triangles() {
        let map = AffineMap::new(&mesh.triangle_coords(t));
        let cell = vel.cell(t);
        for q in 0..rule.len() {
            let mut div = 0.0;
            for (&d, r) in cell.iter().zip(tab.ref_grads_at(q)) {
                let g = map.grad(*r);
                div += u[d] * g[0] + u[nd + d] * g[1];
            }
            acc += rule.weights[q] * map.det.abs() * div * div;
        }
    }
    acc.sqrt()
}

pub fn assemble_convection_skew(
    advecting: &DiscreteField,
    trial: &DofMap,
    test: &DofMap,
) -> Result<SparseMatrix, FemError> {
    Assembler::EXACT.convection(advecting, trial, test)
}

pub fn assemble_buoyancy(theta: &DiscreteField, vel: &DofMap, ri: f64) -> Result<Vec<f64>, FemError> {
    Assembler::EXACT.buoyancy(theta, vel, ri)
}
