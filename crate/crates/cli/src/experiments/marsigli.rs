use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use bouss_core::boussinesq::{Solver, SolverConfig, StabilizationMode, State, ZeroData};
use bouss_core::mesh::{build_rect_mesh, RectSpec};
use rayon::prelude::*;

use super::comparison::method_label;
use super::IdentityCheck;
use crate::config::{ExperimentId, ExperimentSpec};
use crate::output::{write_vtk_file, Cell, RunContext, Table, VtkField};

/// Norms of one Marsigli time level.
#[derive(Debug, Clone, PartialEq)]
pub struct MarsigliSample {
    pub step: usize,
    pub time: f64,
    pub div: f64,
    pub theta_l2: f64,
    /// `0.5 ||u_h||^2`.
    pub kinetic: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub identity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarsigliRun {
    pub mode: StabilizationMode,
    pub samples: Vec<MarsigliSample>,
    /// All requested steps were taken.
    pub completed: bool,
    pub failure: Option<String>,
    pub identity: IdentityCheck,
}

impl MarsigliRun {
    /// Extremes of the temperature over all samples.
    pub fn theta_range(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.theta_min), hi.max(s.theta_max)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarsigliReport {
    pub runs: Vec<MarsigliRun>,
    pub grid: (usize, usize),
}

impl MarsigliReport {
    pub fn run(&self, mode: StabilizationMode) -> Option<&MarsigliRun> {
        self.runs.iter().find(|r| r.mode == mode)
    }

    pub fn table(&self) -> Table {
        let headers = [
            "mode",
            "step",
            "time",
            "||div u_h||",
            "||theta_h||",
            "kinetic energy",
            "theta_min",
            "theta_max",
            "identity residual",
        ];
        let mut table = Table::new(ExperimentId::Marsigli.caption(), headers.map(String::from).to_vec());
        for run in &self.runs {
            for s in &run.samples {
                table.push(vec![
                    Cell::Text(method_label(run.mode).into()),
                    Cell::Num(s.step as f64),
                    Cell::Num(s.time),
                    Cell::Num(s.div),
                    Cell::Num(s.theta_l2),
                    Cell::Num(s.kinetic),
                    Cell::Num(s.theta_min),
                    Cell::Num(s.theta_max),
                    Cell::opt(s.identity),
                ]);
            }
        }
        table
    }
}

fn sample(solver: &Solver, s: &State, identity: Option<f64>) -> MarsigliSample {
    let th = s.theta.coeffs();
    let u = solver.velocity_l2(s.u.coeffs());
    MarsigliSample {
        step: s.step,
        time: s.time,
        div: solver.divergence_l2(s.u.coeffs()),
        theta_l2: solver.scalar_l2(th),
        kinetic: 0.5 * u * u,
        theta_min: th.iter().copied().fold(f64::INFINITY, f64::min),
        theta_max: th.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        identity,
    }
}

fn snapshot(solver: &Solver, s: &State, ctx: &RunContext, name: &str) -> Result<()> {
    let mesh = solver.mesh();
    let nv = mesh.n_vertices();
    // P2 dofs start with the vertices
    let u = s.u.coeffs();
    let n = solver.velocity_space().n_dofs();
    let fields = [
        VtkField::Scalar { name: "theta".into(), values: s.theta.coeffs()[..nv].to_vec() },
        VtkField::Vector { name: "velocity".into(), values: (0..nv).map(|i| [u[i], u[n + i]]).collect() },
    ];
    let title = format!("{name} t = {}", s.time);
    write_vtk_file(&ctx.snapshot_path(&format!("{name}.vtk")), mesh, &title, &fields)
}

fn run_mode(spec: &ExperimentSpec, ctx: &RunContext, mode: StabilizationMode) -> Result<MarsigliRun> {
    let (nx, ny) = spec.grid;
    let mesh = Arc::new(build_rect_mesh(&RectSpec::new(0.0, 8.0, 0.0, 1.0, nx, ny)).context("building Marsigli mesh")?);
    let cfg = SolverConfig {
        nu: spec.nu(),
        kappa: spec.kappa(),
        ri: spec.richardson,
        gamma: spec.gammas[0],
        beta: spec.betas[0],
        dt: spec.dts[0],
        t_end: spec.t_end,
        mode,
        temperature_dirichlet: Vec::new(),
        correction_dirichlet: spec.correction_dirichlet,
        ..SolverConfig::default()
    };
    let solver = Solver::new(mesh, cfg)?;
    let label = method_label(mode);
    let start = Instant::now();
    let mut state = solver.initialize(|_, _| [0.0, 0.0], |x, _| if x < 4.0 { 1.5 } else { 1.0 })?;
    snapshot(&solver, &state, ctx, &format!("marsigli_{label}_t0"))?;
    let mut run = MarsigliRun {
        mode,
        samples: vec![sample(&solver, &state, None)],
        completed: false,
        failure: None,
        identity: IdentityCheck::default(),
    };
    let dt = spec.dts[0];
    for _ in 0..solver.n_steps() {
        match solver.advance(&state, &ZeroData) {
            Ok((next, report)) => {
                if let Some(r) = report.energy_identity {
                    run.identity.record(r);
                }
                state = next;
                run.samples.push(sample(&solver, &state, report.energy_identity));
                if let Some(t) = spec.snapshot_times.iter().find(|&&t| (t - state.time).abs() < 0.5 * dt) {
                    snapshot(&solver, &state, ctx, &format!("marsigli_{label}_t{t}"))?;
                }
            }
            Err(e) => {
                let msg = format!("step {}: {e}", state.step + 1);
                ctx.log(format!("{}: {label} stopped at {msg}", spec.id));
                snapshot(&solver, &state, ctx, &format!("marsigli_{label}_last_good"))?;
                run.failure = Some(msg);
                return Ok(run);
            }
        }
    }
    run.completed = true;
    ctx.log(format!("{}: {label} {} steps in {:.1}s", spec.id, solver.n_steps(), start.elapsed().as_secs_f64()));
    Ok(run)
}

/// Lock exchange in `[0, 8] x [0, 1]`: a heavy and a light fluid released
/// from rest, no-slip walls, insulated boundary.
pub fn run_marsigli(spec: &ExperimentSpec, ctx: &RunContext) -> Result<MarsigliReport> {
    let runs = spec.modes.par_iter().map(|&m| run_mode(spec, ctx, m)).collect::<Result<Vec<_>>>()?;
    Ok(MarsigliReport { runs, grid: spec.grid })
}
