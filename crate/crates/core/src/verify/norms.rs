use crate::fem::{quadrature_rule, AffineMap, DofMap, Tabulation, DATA_DEGREE};

use super::{ManufacturedSolution, VerifyError};

/// Spatial L2 errors of one time level against the exact solution, with the
/// exact fields evaluated at quadrature points.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpatialErrors {
    /// `||u - u_h||`
    pub u: f64,
    /// `||div (u - u_h)||`
    pub div_u: f64,
    /// `||grad (u - u_h)||`
    pub grad_u: f64,
    /// `||grad (u - u~_h)||`
    pub grad_u_tilde: f64,
    /// `||theta - theta_h||`
    pub theta: f64,
}

/// Evaluates [`SpatialErrors`] at time `t`. `u`, `u_tilde` are
/// component-blocked vectors on `vel`; `theta` is scalar on `vel`.
pub fn spatial_errors(
    vel: &DofMap,
    u: &[f64],
    u_tilde: &[f64],
    theta: &[f64],
    exact: &ManufacturedSolution,
    t: f64,
) -> Result<SpatialErrors, VerifyError> {
    let n = vel.n_dofs();
    for (len, expected) in [(u.len(), 2 * n), (u_tilde.len(), 2 * n), (theta.len(), n)] {
        if len != expected {
            return Err(VerifyError::LengthMismatch { expected, found: len });
        }
    }
    let rule = quadrature_rule(DATA_DEGREE).expect("supported degree");
    let tab = Tabulation::new(vel.kind(), &rule);
    let mesh = vel.mesh();
    let nl = vel.n_local();
    let mut grads = vec![[0.0; 2]; nl];
    let mut acc = [0.0; 5];
    for t_idx in 0..mesh.n_triangles() {
        let map = AffineMap::new(&mesh.triangle_coords(t_idx));
        let cell = vel.cell(t_idx);
        for q in 0..rule.len() {
            let w = rule.weights[q] * map.det.abs();
            let [x, y] = map.map(rule.points[q]);
            let phi = tab.values_at(q);
            for (g, r) in grads.iter_mut().zip(tab.ref_grads_at(q)) {
                *g = map.grad(*r);
            }
            // discrete values and gradients
            let mut uh = [0.0; 2];
            let mut guh = [[0.0; 2]; 2];
            let mut gut = [[0.0; 2]; 2];
            let mut th = 0.0;
            for (k, &d) in cell.iter().enumerate() {
                for c in 0..2 {
                    uh[c] += u[c * n + d] * phi[k];
                    for j in 0..2 {
                        guh[c][j] += u[c * n + d] * grads[k][j];
                        gut[c][j] += u_tilde[c * n + d] * grads[k][j];
                    }
                }
                th += theta[d] * phi[k];
            }
            let ue = exact.velocity(x, y, t);
            let ge = exact.velocity_gradient(x, y, t);
            let te = exact.temperature(x, y, t);
            let eu = [ue[0] - uh[0], ue[1] - uh[1]];
            acc[0] += w * (eu[0] * eu[0] + eu[1] * eu[1]);
            let ediv = (ge[0][0] + ge[1][1]) - (guh[0][0] + guh[1][1]);
            acc[1] += w * ediv * ediv;
            let mut sg = 0.0;
            let mut st = 0.0;
            for c in 0..2 {
                for j in 0..2 {
                    sg += (ge[c][j] - guh[c][j]).powi(2);
                    st += (ge[c][j] - gut[c][j]).powi(2);
                }
            }
            acc[2] += w * sg;
            acc[3] += w * st;
            acc[4] += w * (te - th).powi(2);
        }
    }
    let [a, b, c, d, e] = acc.map(f64::sqrt);
    Ok(SpatialErrors { u: a, div_u: b, grad_u: c, grad_u_tilde: d, theta: e })
}

/// Online accumulation of the discrete space-time norms of one quantity
/// `v^n`, `n = 0..=N`:
///
/// ```text
/// |||v|||_{inf,0} = max_{1<=n<=N} ||v^n||
/// |||v|||_{2,0}   = (dt sum_{n=0}^{N-1} ||v^n||^2)^{1/2}
/// ```
///
/// Snapshots must arrive in order; none may be skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeNorm {
    n_steps: usize,
    dt: f64,
    next: usize,
    max: f64,
    sum: f64,
}

impl SpaceTimeNorm {
    pub fn new(n_steps: usize, dt: f64) -> Self {
        Self { n_steps, dt, next: 0, max: 0.0, sum: 0.0 }
    }

    /// Records `||v^n||` for level `n`.
    pub fn push(&mut self, n: usize, value: f64) -> Result<(), VerifyError> {
        if n != self.next || n > self.n_steps {
            return Err(VerifyError::MissingSnapshot { expected: self.next, found: n });
        }
        if n >= 1 {
            self.max = self.max.max(value);
        }
        if n < self.n_steps {
            self.sum += value * value;
        }
        self.next += 1;
        Ok(())
    }

    /// `(|||v|||_{inf,0}, |||v|||_{2,0})`.
    pub fn finish(&self) -> Result<(f64, f64), VerifyError> {
        if self.next != self.n_steps + 1 {
            return Err(VerifyError::MissingSnapshot { expected: self.next, found: self.n_steps });
        }
        Ok((self.max, (self.dt * self.sum).sqrt()))
    }
}
