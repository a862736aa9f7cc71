use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boussinesq::ProblemData;

/// Pressure part of the manufactured solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureField {
    /// `a sin(x + y)(1 + t^2)`.
    Smooth,
    /// `a sin(x + 2y)`, time independent.
    Stationary,
}

/// Closed-form solution on the unit square,
///
/// ```text
/// u     = a_u (cos(pi (y - t)), sin(pi (x + t))) e^t
/// p     = a_p sin(x + y)(1 + t^2)    or    a_p sin(x + 2y)
/// theta = a_theta (sin(pi x) + y e^t)
/// ```
///
/// with forcing synthesized from the momentum and heat equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub nu: f64,
    pub kappa: f64,
    pub ri: f64,
    pub velocity_amplitude: f64,
    pub pressure_amplitude: f64,
    pub temperature_amplitude: f64,
    pub pressure: PressureField,
}

/// Velocity with its time derivative, gradient `grad[i][j] = d u_i / d x_j`
/// and Laplacian.
#[derive(Debug, Clone, Copy)]
struct VelocityJet {
    u: [f64; 2],
    u_t: [f64; 2],
    grad: [[f64; 2]; 2],
    lap: [f64; 2],
}

impl ManufacturedSolution {
    pub fn new(nu: f64, kappa: f64, ri: f64) -> Self {
        Self {
            nu,
            kappa,
            ri,
            velocity_amplitude: 1.0,
            pressure_amplitude: 1.0,
            temperature_amplitude: 1.0,
            pressure: PressureField::Smooth,
        }
    }

    /// Large stationary pressure `amplitude * sin(x + 2y)`.
    pub fn with_large_pressure(mut self, amplitude: f64) -> Self {
        self.pressure = PressureField::Stationary;
        self.pressure_amplitude = amplitude;
        self
    }

    pub fn with_amplitudes(mut self, velocity: f64, pressure: f64, temperature: f64) -> Self {
        self.velocity_amplitude = velocity;
        self.pressure_amplitude = pressure;
        self.temperature_amplitude = temperature;
        self
    }

    fn velocity_jet(&self, x: f64, y: f64, t: f64) -> VelocityJet {
        let a = self.velocity_amplitude * t.exp();
        let (sy, cy) = (PI * (y - t)).sin_cos();
        let (sx, cx) = (PI * (x + t)).sin_cos();
        let u = [a * cy, a * sx];
        VelocityJet {
            u,
            u_t: [a * (cy + PI * sy), a * (sx + PI * cx)],
            grad: [[0.0, -a * PI * sy], [a * PI * cx, 0.0]],
            lap: [-PI * PI * u[0], -PI * PI * u[1]],
        }
    }

    pub fn velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        self.velocity_jet(x, y, t).u
    }

    /// `grad[i][j] = d u_i / d x_j`.
    pub fn velocity_gradient(&self, x: f64, y: f64, t: f64) -> [[f64; 2]; 2] {
        self.velocity_jet(x, y, t).grad
    }

    pub fn pressure(&self, x: f64, y: f64, t: f64) -> f64 {
        let a = self.pressure_amplitude;
        match self.pressure {
            PressureField::Smooth => a * (x + y).sin() * (1.0 + t * t),
            PressureField::Stationary => a * (x + 2.0 * y).sin(),
        }
    }

    pub fn pressure_gradient(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let a = self.pressure_amplitude;
        match self.pressure {
            PressureField::Smooth => {
                let g = a * (x + y).cos() * (1.0 + t * t);
                [g, g]
            }
            PressureField::Stationary => {
                let g = a * (x + 2.0 * y).cos();
                [g, 2.0 * g]
            }
        }
    }

    pub fn temperature(&self, x: f64, y: f64, t: f64) -> f64 {
        self.temperature_amplitude * ((PI * x).sin() + y * t.exp())
    }

    pub fn temperature_gradient(&self, x: f64, _y: f64, t: f64) -> [f64; 2] {
        let b = self.temperature_amplitude;
        [b * PI * (PI * x).cos(), b * t.exp()]
    }

    /// `f = u_t - nu lap u + (u . grad) u + grad p - Ri (0, theta)`.
    pub fn forcing_f(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let j = self.velocity_jet(x, y, t);
        let gp = self.pressure_gradient(x, y, t);
        let theta = self.temperature(x, y, t);
        let mut f = [0.0; 2];
        for i in 0..2 {
            let adv = j.u[0] * j.grad[i][0] + j.u[1] * j.grad[i][1];
            f[i] = j.u_t[i] - self.nu * j.lap[i] + adv + gp[i];
        }
        f[1] -= self.ri * theta;
        f
    }

    /// `Psi = theta_t - kappa lap theta + u . grad theta`.
    pub fn forcing_psi(&self, x: f64, y: f64, t: f64) -> f64 {
        let b = self.temperature_amplitude;
        let theta_t = b * y * t.exp();
        let lap = -b * PI * PI * (PI * x).sin();
        let u = self.velocity(x, y, t);
        let g = self.temperature_gradient(x, y, t);
        theta_t - self.kappa * lap + u[0] * g[0] + u[1] * g[1]
    }
}

impl ProblemData for ManufacturedSolution {
    fn momentum(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        self.forcing_f(x, y, t)
    }

    fn heat(&self, x: f64, y: f64, t: f64) -> f64 {
        self.forcing_psi(x, y, t)
    }

    fn velocity_trace(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        self.velocity(x, y, t)
    }

    fn temperature_trace(&self, x: f64, y: f64, t: f64) -> f64 {
        self.temperature(x, y, t)
    }
}

/// Step for first derivatives in the residual oracle.
const FD_STEP: f64 = 1e-5;
/// Step for the fourth-order second-derivative stencil; a 1e-5 step would
/// put roundoff near 1e-5.
const FD_STEP_2: f64 = 1e-3;

fn d1(f: impl Fn(f64) -> f64, s: f64) -> f64 {
    (f(s + FD_STEP) - f(s - FD_STEP)) / (2.0 * FD_STEP)
}

fn d2(f: impl Fn(f64) -> f64, s: f64) -> f64 {
    let h = FD_STEP_2;
    (-f(s + 2.0 * h) + 16.0 * f(s + h) - 30.0 * f(s) + 16.0 * f(s - h) - f(s - 2.0 * h)) / (12.0 * h * h)
}

/// Residuals of the momentum (2 components) and heat equations for the
/// synthesized forcing, with every derivative taken by finite differences
/// of the closed-form `u`, `p`, `theta`.
pub fn pde_residual(ms: &ManufacturedSolution, x: f64, y: f64, t: f64) -> [f64; 3] {
    let u = |c: usize| move |xx: f64, yy: f64, tt: f64| ms.velocity(xx, yy, tt)[c];
    let theta = |xx: f64, yy: f64, tt: f64| ms.temperature(xx, yy, tt);
    let uv = ms.velocity(x, y, t);
    let f = ms.forcing_f(x, y, t);
    let mut r = [0.0; 3];
    for c in 0..2 {
        let uc = u(c);
        let ut = d1(|s| uc(x, y, s), t);
        let ux = d1(|s| uc(s, y, t), x);
        let uy = d1(|s| uc(x, s, t), y);
        let lap = d2(|s| uc(s, y, t), x) + d2(|s| uc(x, s, t), y);
        let px = if c == 0 { d1(|s| ms.pressure(s, y, t), x) } else { d1(|s| ms.pressure(x, s, t), y) };
        let buoy = if c == 1 { ms.ri * theta(x, y, t) } else { 0.0 };
        r[c] = ut - ms.nu * lap + uv[0] * ux + uv[1] * uy + px - buoy - f[c];
    }
    let tt = d1(|s| theta(x, y, s), t);
    let tx = d1(|s| theta(s, y, t), x);
    let ty = d1(|s| theta(x, s, t), y);
    let lap = d2(|s| theta(s, y, t), x) + d2(|s| theta(x, s, t), y);
    r[2] = tt - ms.kappa * lap + uv[0] * tx + uv[1] * ty - ms.forcing_psi(x, y, t);
    r
}

/// Largest absolute residual over `n_points` pseudo-random interior points
/// of `(0,1)^2 x (0, t_max)`.
pub fn max_pde_residual(ms: &ManufacturedSolution, n_points: usize, t_max: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..n_points {
        let x = rng.random_range(0.01..0.99);
        let y = rng.random_range(0.01..0.99);
        let t = rng.random_range(0.01..0.99) * t_max;
        for r in pde_residual(ms, x, y, t) {
            worst = worst.max(r.abs());
        }
    }
    worst
}
