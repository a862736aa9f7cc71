//! Experiment drivers. Each runner checks the manufactured forcing first,
//! evaluates its parameter grid (cells in parallel, results in grid order)
//! and returns a report that renders to a [`Table`].

mod comparison;
mod marsigli;
mod rates;

use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use bouss_core::boussinesq::{Solver, SolverConfig, StabilizationMode};
use bouss_core::mesh::{build_rect_mesh, Mesh, RectSpec};
use bouss_core::verify::{check_forcing, spatial_errors, ManufacturedSolution, SpaceTimeNorm};

pub use comparison::{
    run_element_study, run_pressure_robust, run_rayleigh_sweep, ComparisonReport, ComparisonRow, ElementReport,
    ElementRow,
};
pub use marsigli::{run_marsigli, MarsigliReport, MarsigliRun, MarsigliSample};
pub use rates::{run_spatial_rates, run_temporal_rates, RateReport, RateRow};

use crate::config::{ExperimentId, ExperimentSpec};
use crate::output::{RunContext, Table};

/// Tolerance of the grad-div energy identity at every modular step.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Rates are not fitted to errors below this level.
pub const NOISE_FLOOR: f64 = 1e-11;

/// Column heads shared by the tables.
pub mod col {
    pub const U_LINF: &str = "|||u-u_h|||_{inf,0}";
    pub const DIV_LINF: &str = "|||div(u-u_h)|||_{inf,0}";
    pub const DIV_L2: &str = "|||div(u-u_h)|||_{2,0}";
    pub const GRAD_UT_L2: &str = "|||grad(u-u~_h)|||_{2,0}";
    pub const GRAD_U_L2: &str = "|||grad(u-u_h)|||_{2,0}";
    pub const DIV_FINAL: &str = "||div u_h^N||";

    pub fn rate(of: &str) -> String {
        format!("rate {of}")
    }

    pub fn method(of: &str, label: &str) -> String {
        format!("{of} {label}")
    }
}

/// Largest grad-div identity residual over the modular steps of one run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IdentityCheck {
    pub steps: usize,
    pub max_residual: f64,
}

impl IdentityCheck {
    pub fn record(&mut self, r: f64) {
        self.steps += 1;
        // NaN must not be swallowed by max
        self.max_residual = if r.is_nan() { f64::NAN } else { self.max_residual.max(r) };
    }

    pub fn merge(&mut self, other: &IdentityCheck) {
        self.steps += other.steps;
        self.max_residual =
            if other.max_residual.is_nan() { f64::NAN } else { self.max_residual.max(other.max_residual) };
    }

    pub fn holds(&self) -> bool {
        self.max_residual <= IDENTITY_TOL
    }
}

/// Space-time errors of one manufactured-solution run.
#[derive(Debug, Clone, PartialEq)]
pub struct MmsNorms {
    pub u_linf: f64,
    pub div_linf: f64,
    pub div_l2: f64,
    pub grad_u_l2: f64,
    pub grad_ut_l2: f64,
    /// `||div u_h^N||` at the final level.
    pub div_final: f64,
    pub steps: usize,
    /// `Some` in modular mode.
    pub identity: Option<IdentityCheck>,
    pub wall_time: Duration,
}

/// Advances `cfg` on `mesh` against `ms` and accumulates the error norms.
pub fn run_manufactured(mesh: Arc<Mesh>, cfg: SolverConfig, ms: &ManufacturedSolution) -> Result<MmsNorms> {
    let start = Instant::now();
    let dt = cfg.dt;
    let modular = cfg.mode == StabilizationMode::Modular;
    let solver = Solver::new(mesh, cfg)?;
    let n = solver.n_steps();
    let vel = solver.velocity_space().clone();
    let mut state = solver.initialize(|x, y| ms.velocity(x, y, 0.0), |x, y| ms.temperature(x, y, 0.0))?;
    let [mut u, mut div, mut grad, mut grad_t] = [(); 4].map(|_| SpaceTimeNorm::new(n, dt));
    let mut identity = IdentityCheck::default();
    let mut push = |k: usize, s: &bouss_core::boussinesq::State| -> Result<()> {
        let e = spatial_errors(&vel, s.u.coeffs(), s.u_tilde.coeffs(), s.theta.coeffs(), ms, s.time)?;
        u.push(k, e.u)?;
        div.push(k, e.div_u)?;
        grad.push(k, e.grad_u)?;
        grad_t.push(k, e.grad_u_tilde)?;
        Ok(())
    };
    push(0, &state)?;
    for k in 1..=n {
        let (next, report) = solver.advance(&state, ms)?;
        if let Some(r) = report.energy_identity {
            identity.record(r);
        }
        state = next;
        push(k, &state)?;
    }
    let (u_linf, _) = u.finish()?;
    let (div_linf, div_l2) = div.finish()?;
    let (_, grad_u_l2) = grad.finish()?;
    let (_, grad_ut_l2) = grad_t.finish()?;
    Ok(MmsNorms {
        u_linf,
        div_linf,
        div_l2,
        grad_u_l2,
        grad_ut_l2,
        div_final: solver.divergence_l2(state.u.coeffs()),
        steps: n,
        identity: modular.then_some(identity),
        wall_time: start.elapsed(),
    })
}

pub fn unit_square(n: usize) -> Result<Arc<Mesh>> {
    Ok(Arc::new(build_rect_mesh(&RectSpec::unit_square(n)).with_context(|| format!("building {n}x{n} mesh"))?))
}

/// Runs the finite-difference forcing oracle; an error stops the experiment
/// before any solve.
pub fn forcing_oracle(spec: &ExperimentSpec, ms: &ManufacturedSolution, ctx: &RunContext) -> Result<f64> {
    let r = check_forcing(ms, spec.forcing_points, spec.t_end, spec.seed)
        .with_context(|| format!("{}: forcing oracle failed", spec.id))?;
    ctx.log(format!("{}: forcing oracle max residual {r:.3e} at {} points", spec.id, spec.forcing_points));
    Ok(r)
}

/// Result of any experiment.
#[derive(Debug, Clone)]
pub enum ExperimentReport {
    Rates(RateReport),
    Comparison(ComparisonReport),
    Elements(ElementReport),
    Marsigli(MarsigliReport),
}

impl ExperimentReport {
    pub fn table(&self) -> Table {
        match self {
            Self::Rates(r) => r.table(),
            Self::Comparison(r) => r.table(),
            Self::Elements(r) => r.table(),
            Self::Marsigli(r) => r.table(),
        }
    }

    /// Energy-identity checks of all modular runs.
    pub fn identity(&self) -> IdentityCheck {
        let mut acc = IdentityCheck::default();
        let mut add = |n: &MmsNorms| {
            if let Some(c) = &n.identity {
                acc.merge(c);
            }
        };
        match self {
            Self::Rates(r) => r.rows.iter().for_each(|row| add(&row.norms)),
            Self::Comparison(r) => r.rows.iter().flat_map(|row| &row.runs).for_each(|(_, n)| add(n)),
            Self::Elements(r) => r.rows.iter().for_each(|row| {
                add(&row.standard);
                if let Some(m) = &row.modular {
                    add(m);
                }
            }),
            Self::Marsigli(r) => r.runs.iter().for_each(|run| acc.merge(&run.identity)),
        }
        acc
    }
}

/// Runs `spec`, writes `<out>/<id>.csv` and logs the identity check.
pub fn run_experiment(spec: &ExperimentSpec, ctx: &RunContext) -> Result<ExperimentReport> {
    spec.validate()?;
    let start = Instant::now();
    ctx.log(format!("{}: start", spec.id));
    let report = match spec.id {
        ExperimentId::SpatialRates => ExperimentReport::Rates(run_spatial_rates(spec, ctx)?),
        ExperimentId::TemporalRates => ExperimentReport::Rates(run_temporal_rates(spec, ctx)?),
        ExperimentId::PressureRobust => ExperimentReport::Comparison(run_pressure_robust(spec, ctx)?),
        ExperimentId::RayleighSweep => ExperimentReport::Comparison(run_rayleigh_sweep(spec, ctx)?),
        ExperimentId::ElementStudy => ExperimentReport::Elements(run_element_study(spec, ctx)?),
        ExperimentId::Marsigli => ExperimentReport::Marsigli(run_marsigli(spec, ctx)?),
    };
    let path = ctx.out_dir().join(format!("{}.csv", spec.id));
    report.table().write_csv_file(&path)?;
    let id = report.identity();
    if id.steps > 0 {
        let verdict = if id.holds() { "holds" } else { "VIOLATED" };
        ctx.log(format!(
            "{}: energy identity {verdict} over {} modular steps, max relative residual {:.3e}",
            spec.id, id.steps, id.max_residual
        ));
    }
    ctx.log(format!("{}: wrote {} in {:.1}s", spec.id, path.display(), start.elapsed().as_secs_f64()));
    Ok(report)
}
