use std::sync::Arc;

use crate::fem::{
    divergence_l2, l2_project_scalar, l2_project_vector, vector_block, Assembler, DirichletBc, DiscreteField, DofMap,
};
use crate::mesh::Mesh;
use crate::sparse::{compose_saddle, solve, DirectSolver, LinearSolveReport, SparseMatrix, DEFAULT_TOL};

use super::{BoussinesqError, SolverConfig, StabilizationMode};

/// Body forces and boundary traces, all evaluated at `t^{n+1}`.
pub trait ProblemData: Sync {
    fn momentum(&self, _x: f64, _y: f64, _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn heat(&self, _x: f64, _y: f64, _t: f64) -> f64 {
        0.0
    }

    fn velocity_trace(&self, _x: f64, _y: f64, _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn temperature_trace(&self, _x: f64, _y: f64, _t: f64) -> f64 {
        0.0
    }

    /// `false` lets the solver skip load assembly.
    fn is_forced(&self) -> bool {
        true
    }
}

/// No forcing, homogeneous traces.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroData;

impl ProblemData for ZeroData {
    fn is_forced(&self) -> bool {
        false
    }
}

/// Discrete unknowns at one time level.
#[derive(Debug, Clone)]
pub struct State {
    pub step: usize,
    pub time: f64,
    /// Momentum-step velocity; equals `u` at level 0.
    pub u_tilde: DiscreteField,
    /// Corrected velocity, the advecting field of the next step.
    pub u: DiscreteField,
    /// Zero-mean pressure.
    pub p: DiscreteField,
    pub theta: DiscreteField,
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub u_l2: f64,
    pub div_u_l2: f64,
    pub u_tilde_l2: f64,
    pub theta_l2: f64,
    /// Relative residual of the grad-div energy identity (modular mode only).
    pub energy_identity: Option<f64>,
    pub momentum_solve: LinearSolveReport,
    pub temperature_solve: LinearSolveReport,
    pub graddiv_solve: Option<LinearSolveReport>,
}

/// Terms of the grad-div energy identity
/// `|u~|^2 = |u|^2 + |u~ - u|^2 + 2 gamma dt |div u|^2
///           + beta (|div u|^2 - |div u^n|^2 + |div (u - u^n)|^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyIdentity {
    pub lhs: f64,
    pub u: f64,
    pub increment: f64,
    pub graddiv: f64,
    pub beta: f64,
}

impl EnergyIdentity {
    pub fn rhs(&self) -> f64 {
        self.u + self.increment + self.graddiv + self.beta
    }

    /// `|lhs - rhs|` relative to the largest term magnitude.
    pub fn relative_residual(&self) -> f64 {
        let scale = [self.lhs, self.u, self.increment, self.graddiv, self.beta.abs()]
            .into_iter()
            .fold(0.0, f64::max);
        let diff = (self.lhs - self.rhs()).abs();
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

/// Evaluates the identity terms with the vector mass matrix `mass` and the
/// grad-div matrix `g`.
#[allow(clippy::too_many_arguments)]
pub fn energy_identity_terms(
    mass: &SparseMatrix,
    g: &SparseMatrix,
    u_tilde: &[f64],
    u: &[f64],
    u_prev: &[f64],
    gamma: f64,
    beta: f64,
    dt: f64,
) -> EnergyIdentity {
    let diff: Vec<f64> = u_tilde.iter().zip(u).map(|(a, b)| a - b).collect();
    let jump: Vec<f64> = u.iter().zip(u_prev).map(|(a, b)| a - b).collect();
    let div_u = g.bilinear(u, u);
    EnergyIdentity {
        lhs: mass.bilinear(u_tilde, u_tilde),
        u: mass.bilinear(u, u),
        increment: mass.bilinear(&diff, &diff),
        graddiv: 2.0 * gamma * dt * div_u,
        beta: beta * (div_u - g.bilinear(u_prev, u_prev) + g.bilinear(&jump, &jump)),
    }
}

struct GradDivStep {
    /// Unconstrained `M + (beta + gamma dt) G`, kept for lifting.
    matrix: SparseMatrix,
    solver: DirectSolver,
}

/// Assembled time-independent operators and factorizations for one
/// configuration on one mesh.
pub struct Solver {
    config: SolverConfig,
    n_steps: usize,
    vel: Arc<DofMap>,
    pres: Arc<DofMap>,
    /// Scalar P2 mass, shared by velocity components and temperature.
    mass: SparseMatrix,
    mass_v: SparseMatrix,
    graddiv: SparseMatrix,
    div: SparseMatrix,
    /// `M/dt + nu K (+ gamma G)` on the vector space.
    momentum_base: SparseMatrix,
    /// `M/dt + kappa K` on the scalar space.
    heat_base: SparseMatrix,
    pressure_weights: Vec<f64>,
    area: f64,
    velocity_bc: Vec<usize>,
    temperature_bc: Vec<usize>,
    step2: Option<GradDivStep>,
    warnings: Vec<String>,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver")
            .field("config", &self.config)
            .field("velocity_dofs", &(2 * self.vel.n_dofs()))
            .field("pressure_dofs", &self.pres.n_dofs())
            .finish()
    }
}

impl Solver {
    pub fn new(mesh: Arc<Mesh>, config: SolverConfig) -> Result<Self, BoussinesqError> {
        config.validate()?;
        let n_steps = config.n_steps()?;
        let mut warnings = Vec::new();
        if let Some(w) = config.pair.compatibility_warning(&mesh) {
            warnings.push(w);
        }
        let vel = Arc::new(DofMap::new(mesh.clone(), config.pair.velocity()));
        let pres = Arc::new(DofMap::new(mesh.clone(), config.pair.pressure()));
        let asm = Assembler::EXACT;
        let mass = asm.mass(&vel);
        let stiff = asm.stiffness(&vel, 1.0)?;
        let mass_v = vector_block(&mass);
        let stiff_v = vector_block(&stiff);
        let graddiv = asm.graddiv(&vel);
        let div = asm.divergence(&vel, &pres)?;
        let dt = config.dt;

        let mut momentum_base = mass_v.lincomb(1.0 / dt, &stiff_v, config.nu)?;
        if config.mode == StabilizationMode::Standard {
            momentum_base = momentum_base.lincomb(1.0, &graddiv, config.gamma)?;
        }
        let heat_base = mass.lincomb(1.0 / dt, &stiff, config.kappa)?;
        let pressure_weights = asm.load_scalar(&pres, |_, _| 1.0);
        let area = pressure_weights.iter().sum();
        let velocity_bc = vel.boundary_dofs_on(&config.velocity_dirichlet);
        let temperature_bc = vel.boundary_dofs_on(&config.temperature_dirichlet);

        let step2 = if config.mode == StabilizationMode::Modular {
            let matrix = mass_v.lincomb(1.0, &graddiv, config.beta + config.gamma * dt)?;
            let bc = if config.correction_dirichlet {
                DirichletBc::homogeneous(vector_dofs(&velocity_bc, vel.n_dofs()))
            } else {
                DirichletBc::new()
            };
            let constrained = crate::fem::constrain_matrix(&matrix, &bc)?;
            Some(GradDivStep { matrix, solver: DirectSolver::factorize(constrained)? })
        } else {
            None
        };

        Ok(Self {
            config,
            n_steps,
            vel,
            pres,
            mass,
            mass_v,
            graddiv,
            div,
            momentum_base,
            heat_base,
            pressure_weights,
            area,
            velocity_bc,
            temperature_bc,
            step2,
            warnings,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// P2 map shared by both velocity components and the temperature.
    pub fn velocity_space(&self) -> &Arc<DofMap> {
        &self.vel
    }

    pub fn pressure_space(&self) -> &Arc<DofMap> {
        &self.pres
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.vel.mesh()
    }

    /// Scalar P2 mass matrix.
    pub fn mass(&self) -> &SparseMatrix {
        &self.mass
    }

    /// Vector mass matrix `diag(M, M)`.
    pub fn vector_mass(&self) -> &SparseMatrix {
        &self.mass_v
    }

    pub fn graddiv(&self) -> &SparseMatrix {
        &self.graddiv
    }

    pub fn divergence(&self) -> &SparseMatrix {
        &self.div
    }

    /// Scalar velocity dofs (component 0 numbering) carrying Dirichlet data.
    pub fn velocity_dirichlet_dofs(&self) -> &[usize] {
        &self.velocity_bc
    }

    pub fn temperature_dirichlet_dofs(&self) -> &[usize] {
        &self.temperature_bc
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// L2 projections of the initial data; `u~^0 = u^0`, `p^0 = 0`.
    pub fn initialize(
        &self,
        u0: impl Fn(f64, f64) -> [f64; 2],
        theta0: impl Fn(f64, f64) -> f64,
    ) -> Result<State, BoussinesqError> {
        let u = l2_project_vector(self.vel.clone(), u0)?;
        let theta = l2_project_scalar(self.vel.clone(), theta0)?;
        self.state_from_fields(u.into_coeffs(), theta.into_coeffs())
    }

    /// Level-0 state from raw coefficient vectors.
    pub fn state_from_fields(&self, u: Vec<f64>, theta: Vec<f64>) -> Result<State, BoussinesqError> {
        let u = DiscreteField::from_coeffs(self.vel.clone(), 2, u)?;
        let theta = DiscreteField::from_coeffs(self.vel.clone(), 1, theta)?;
        if !u.is_finite() || !theta.is_finite() {
            return Err(BoussinesqError::NonFinite { step: 0, quantity: "initial data" });
        }
        Ok(State {
            step: 0,
            time: 0.0,
            u_tilde: u.clone(),
            u,
            p: DiscreteField::zeros(self.pres.clone(), 1),
            theta,
        })
    }

    /// Skew convection matrix on the scalar P2 space for advecting field `u`.
    pub fn convection(&self, u: &DiscreteField) -> Result<SparseMatrix, BoussinesqError> {
        Ok(Assembler::EXACT.convection(u, &self.vel, &self.vel)?)
    }

    /// Velocity Dirichlet constraint at time `t`, component-blocked.
    pub fn velocity_bc(&self, data: &dyn ProblemData, t: f64) -> Result<DirichletBc, BoussinesqError> {
        let n = self.vel.n_dofs();
        let coords = self.vel.dof_coords();
        let pairs = self.velocity_bc.iter().flat_map(|&d| {
            let [x, y] = coords[d];
            let g = data.velocity_trace(x, y, t);
            [(d, g[0]), (n + d, g[1])]
        });
        Ok(DirichletBc::from_pairs(pairs)?)
    }

    fn temperature_bc(&self, data: &dyn ProblemData, t: f64) -> Result<DirichletBc, BoussinesqError> {
        let coords = self.vel.dof_coords();
        let pairs = self.temperature_bc.iter().map(|&d| {
            let [x, y] = coords[d];
            (d, data.temperature_trace(x, y, t))
        });
        Ok(DirichletBc::from_pairs(pairs)?)
    }

    /// Momentum/continuity system for `(u~^{n+1}, p^{n+1})`. `conv` is the
    /// scalar convection matrix of `u^n`.
    pub fn step1_velocity_pressure_with(
        &self,
        state: &State,
        conv: &SparseMatrix,
        data: &dyn ProblemData,
    ) -> Result<(Vec<f64>, Vec<f64>, LinearSolveReport), BoussinesqError> {
        let nv = 2 * self.vel.n_dofs();
        let np = self.pres.n_dofs();
        let t = self.config.time(state.step + 1);
        let a = self.momentum_base.lincomb(1.0, &vector_block(conv), 1.0)?;
        let saddle = compose_saddle(&a, &self.div)?;

        let mut rhs = self.mass_v.spmv(state.u.coeffs())?;
        let inv_dt = 1.0 / self.config.dt;
        rhs.iter_mut().for_each(|r| *r *= inv_dt);
        let buoy = Assembler::EXACT.buoyancy(&state.theta, &self.vel, self.config.ri)?;
        for (r, b) in rhs.iter_mut().zip(&buoy) {
            *r += b;
        }
        if data.is_forced() {
            let f = Assembler::EXACT.load_vector(&self.vel, |x, y| data.momentum(x, y, t));
            for (r, v) in rhs.iter_mut().zip(&f) {
                *r += v;
            }
        }
        rhs.resize(nv + np, 0.0);

        // pin the first pressure dof; the mean is removed afterwards
        let bc = self.velocity_bc(data, t)?.merge(&DirichletBc::homogeneous([nv]))?;
        let (sys, rhs) = crate::fem::apply_dirichlet(&saddle, &rhs, &bc)?;
        let (mut x, report) = solve(&sys, &rhs, DEFAULT_TOL)?;
        let mut p = x.split_off(nv);
        let mean = p.iter().zip(&self.pressure_weights).map(|(a, w)| a * w).sum::<f64>() / self.area;
        p.iter_mut().for_each(|v| *v -= mean);
        Ok((x, p, report))
    }

    pub fn step1_velocity_pressure(
        &self,
        state: &State,
        data: &dyn ProblemData,
    ) -> Result<(Vec<f64>, Vec<f64>, LinearSolveReport), BoussinesqError> {
        let conv = self.convection(&state.u)?;
        self.step1_velocity_pressure_with(state, &conv, data)
    }

    /// Temperature at `n+1`, advected by `u^n`.
    pub fn step1_temperature_with(
        &self,
        state: &State,
        conv: &SparseMatrix,
        data: &dyn ProblemData,
    ) -> Result<(Vec<f64>, LinearSolveReport), BoussinesqError> {
        let t = self.config.time(state.step + 1);
        let a = self.heat_base.lincomb(1.0, conv, 1.0)?;
        let mut rhs = self.mass.spmv(state.theta.coeffs())?;
        let inv_dt = 1.0 / self.config.dt;
        rhs.iter_mut().for_each(|r| *r *= inv_dt);
        if data.is_forced() {
            let psi = Assembler::EXACT.load_scalar(&self.vel, |x, y| data.heat(x, y, t));
            for (r, v) in rhs.iter_mut().zip(&psi) {
                *r += v;
            }
        }
        let bc = self.temperature_bc(data, t)?;
        let (sys, rhs) = crate::fem::apply_dirichlet(&a, &rhs, &bc)?;
        Ok(solve(&sys, &rhs, DEFAULT_TOL)?)
    }

    pub fn step1_temperature(
        &self,
        state: &State,
        data: &dyn ProblemData,
    ) -> Result<(Vec<f64>, LinearSolveReport), BoussinesqError> {
        let conv = self.convection(&state.u)?;
        self.step1_temperature_with(state, &conv, data)
    }

    /// Grad-div correction; `t` is the time level of `u_tilde`.
    pub fn step2_graddiv(
        &self,
        u_tilde: &[f64],
        u_prev: &[f64],
        t: f64,
        data: &dyn ProblemData,
    ) -> Result<(Vec<f64>, LinearSolveReport), BoussinesqError> {
        let step2 = self.step2.as_ref().ok_or_else(|| {
            BoussinesqError::InvalidConfig(format!("grad-div correction requested in mode {}", self.config.mode))
        })?;
        let mut rhs = self.mass_v.spmv(u_tilde)?;
        if self.config.beta != 0.0 {
            let gu = self.graddiv.spmv(u_prev)?;
            for (r, g) in rhs.iter_mut().zip(&gu) {
                *r += self.config.beta * g;
            }
        }
        let bc = if self.config.correction_dirichlet { self.velocity_bc(data, t)? } else { DirichletBc::new() };
        let rhs = crate::fem::lift_rhs(&step2.matrix, &rhs, &bc)?;
        Ok(step2.solver.solve(&rhs, DEFAULT_TOL)?)
    }

    pub fn energy_identity(&self, u_tilde: &[f64], u: &[f64], u_prev: &[f64]) -> EnergyIdentity {
        energy_identity_terms(
            &self.mass_v,
            &self.graddiv,
            u_tilde,
            u,
            u_prev,
            self.config.gamma,
            self.config.beta,
            self.config.dt,
        )
    }

    pub fn velocity_l2(&self, u: &[f64]) -> f64 {
        self.mass_v.bilinear(u, u).max(0.0).sqrt()
    }

    pub fn divergence_l2(&self, u: &[f64]) -> f64 {
        divergence_l2(&self.vel, u)
    }

    pub fn scalar_l2(&self, theta: &[f64]) -> f64 {
        self.mass.bilinear(theta, theta).max(0.0).sqrt()
    }

    /// One full step `n -> n+1`.
    pub fn advance(&self, state: &State, data: &dyn ProblemData) -> Result<(State, StepReport), BoussinesqError> {
        let step = state.step + 1;
        self.advance_inner(state, data).map_err(|e| match e {
            e @ BoussinesqError::NonFinite { .. } => e,
            e => BoussinesqError::AtStep { step, source: Box::new(e) },
        })
    }

    fn advance_inner(&self, state: &State, data: &dyn ProblemData) -> Result<(State, StepReport), BoussinesqError> {
        let step = state.step + 1;
        let t = self.config.time(step);
        let conv = self.convection(&state.u)?;
        let (u_tilde, p, momentum_solve) = self.step1_velocity_pressure_with(state, &conv, data)?;
        let (theta, temperature_solve) = self.step1_temperature_with(state, &conv, data)?;
        let (u, graddiv_solve, energy_identity) = match self.config.mode {
            StabilizationMode::Modular => {
                let (u, rep) = self.step2_graddiv(&u_tilde, state.u.coeffs(), t, data)?;
                let e = self.energy_identity(&u_tilde, &u, state.u.coeffs());
                (u, Some(rep), Some(e.relative_residual()))
            }
            _ => (u_tilde.clone(), None, None),
        };

        let report = StepReport {
            step,
            time: t,
            u_l2: self.velocity_l2(&u),
            div_u_l2: self.divergence_l2(&u),
            u_tilde_l2: self.velocity_l2(&u_tilde),
            theta_l2: self.scalar_l2(&theta),
            energy_identity,
            momentum_solve,
            temperature_solve,
            graddiv_solve,
        };
        for (quantity, v) in [
            ("velocity norm", report.u_l2),
            ("divergence norm", report.div_u_l2),
            ("momentum-step velocity norm", report.u_tilde_l2),
            ("temperature norm", report.theta_l2),
        ] {
            if !v.is_finite() {
                return Err(BoussinesqError::NonFinite { step, quantity });
            }
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(BoussinesqError::NonFinite { step, quantity: "pressure" });
        }

        let next = State {
            step,
            time: t,
            u_tilde: DiscreteField::from_coeffs(self.vel.clone(), 2, u_tilde)?,
            u: DiscreteField::from_coeffs(self.vel.clone(), 2, u)?,
            p: DiscreteField::from_coeffs(self.pres.clone(), 1, p)?,
            theta: DiscreteField::from_coeffs(self.vel.clone(), 1, theta)?,
        };
        Ok((next, report))
    }
}

fn vector_dofs(scalar: &[usize], n: usize) -> impl Iterator<Item = usize> + '_ {
    scalar.iter().copied().chain(scalar.iter().map(move |d| n + d))
}
