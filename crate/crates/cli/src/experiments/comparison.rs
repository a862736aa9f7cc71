use std::sync::Arc;

use anyhow::Result;
use bouss_core::boussinesq::{SolverConfig, StabilizationMode};
use bouss_core::fem::ElementPair;
use bouss_core::mesh::{barycentric_refine, Mesh};
use bouss_core::verify::ManufacturedSolution;
use rayon::prelude::*;

use super::{col, forcing_oracle, run_manufactured, unit_square, MmsNorms};
use crate::config::{ExperimentId, ExperimentSpec, MeshFamily};
use crate::output::{Cell, RunContext, Table};

/// Column label of a method.
pub fn method_label(mode: StabilizationMode) -> &'static str {
    match mode {
        StabilizationMode::None => "no-stab",
        StabilizationMode::Standard => "standard",
        StabilizationMode::Modular => "modular",
    }
}

type Norm = fn(&MmsNorms) -> f64;

const NORMS: [(&str, Norm); 3] =
    [(col::GRAD_U_L2, |n| n.grad_u_l2), (col::DIV_L2, |n| n.div_l2), (col::DIV_FINAL, |n| n.div_final)];

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub gamma: f64,
    pub beta: f64,
    pub rayleigh: f64,
    /// Subdivisions of the unit square.
    pub n: usize,
    /// One run per requested mode, in the requested order.
    pub runs: Vec<(StabilizationMode, MmsNorms)>,
}

impl ComparisonRow {
    pub fn get(&self, mode: StabilizationMode) -> Option<&MmsNorms> {
        self.runs.iter().find(|(m, _)| *m == mode).map(|(_, n)| n)
    }
}

/// Side-by-side errors of the methods over a parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub id: ExperimentId,
    pub modes: Vec<StabilizationMode>,
    pub rows: Vec<ComparisonRow>,
    pub forcing_residual: f64,
}

impl ComparisonReport {
    /// Row for `n` subdivisions (first match in grid order).
    pub fn row_for_mesh(&self, n: usize) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    pub fn table(&self) -> Table {
        let sweep = self.id == ExperimentId::RayleighSweep;
        let mut headers: Vec<String> =
            if sweep { vec!["Ra".into()] } else { vec!["gamma".into(), "beta".into(), "h".into()] };
        for (name, _) in NORMS {
            for &m in &self.modes {
                headers.push(col::method(name, method_label(m)));
            }
        }
        let mut table = Table::new(self.id.caption(), headers);
        for row in &self.rows {
            let mut cells =
                if sweep { vec![Cell::Num(row.rayleigh)] } else { vec![Cell::Num(row.gamma), Cell::Num(row.beta), Cell::Num(1.0 / row.n as f64)] };
            for (_, f) in NORMS {
                for (_, norms) in &row.runs {
                    cells.push(Cell::Num(f(norms)));
                }
            }
            table.push(cells);
        }
        table
    }
}

fn mms_config(spec: &ExperimentSpec, ri: f64, mode: StabilizationMode, gamma: f64, beta: f64) -> SolverConfig {
    SolverConfig {
        nu: spec.nu(),
        kappa: spec.kappa(),
        ri,
        gamma,
        beta,
        dt: spec.dts[0],
        t_end: spec.t_end,
        mode,
        correction_dirichlet: spec.correction_dirichlet,
        ..SolverConfig::default()
    }
}

fn richardson(spec: &ExperimentSpec, ra: f64) -> f64 {
    SolverConfig::richardson_from_rayleigh(ra, spec.reynolds, spec.prandtl)
}

fn compare(
    spec: &ExperimentSpec,
    ctx: &RunContext,
    cells: Vec<(f64, f64, f64, usize)>,
    make_ms: impl Fn(f64) -> ManufacturedSolution + Sync,
) -> Result<Vec<ComparisonRow>> {
    let jobs: Vec<(usize, StabilizationMode)> =
        (0..cells.len()).flat_map(|i| spec.modes.iter().map(move |&m| (i, m))).collect();
    let results = jobs
        .par_iter()
        .map(|&(i, mode)| {
            let (gamma, beta, ra, n) = cells[i];
            let ri = richardson(spec, ra);
            let norms = run_manufactured(unit_square(n)?, mms_config(spec, ri, mode, gamma, beta), &make_ms(ri))?;
            ctx.log(format!(
                "{}: h = 1/{n}, Ra = {ra:e}, gamma = {gamma:e}, beta = {beta}, {mode} done in {:.1}s",
                spec.id,
                norms.wall_time.as_secs_f64()
            ));
            Ok(norms)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut it = results.into_iter();
    Ok(cells
        .into_iter()
        .map(|(gamma, beta, rayleigh, n)| ComparisonRow {
            gamma,
            beta,
            rayleigh,
            n,
            runs: spec.modes.iter().map(|&m| (m, it.next().expect("one result per job"))).collect(),
        })
        .collect())
}

/// Three methods on the large-pressure solution over `gamma x beta x mesh`.
pub fn run_pressure_robust(spec: &ExperimentSpec, ctx: &RunContext) -> Result<ComparisonReport> {
    let ra = spec.rayleigh[0];
    let make = |ri: f64| ManufacturedSolution::new(spec.nu(), spec.kappa(), ri).with_large_pressure(spec.pressure_amplitude);
    let forcing_residual = forcing_oracle(spec, &make(richardson(spec, ra)), ctx)?;
    let mut cells = Vec::new();
    for &g in &spec.gammas {
        for &b in &spec.betas {
            for &n in &spec.meshes {
                cells.push((g, b, ra, n));
            }
        }
    }
    let rows = compare(spec, ctx, cells, make)?;
    Ok(ComparisonReport { id: spec.id, modes: spec.modes.clone(), rows, forcing_residual })
}

/// Three methods over the Rayleigh list on one mesh.
pub fn run_rayleigh_sweep(spec: &ExperimentSpec, ctx: &RunContext) -> Result<ComparisonReport> {
    let make = |ri: f64| ManufacturedSolution::new(spec.nu(), spec.kappa(), ri);
    let mut forcing_residual = 0.0f64;
    for &ra in &spec.rayleigh {
        forcing_residual = forcing_residual.max(forcing_oracle(spec, &make(richardson(spec, ra)), ctx)?);
    }
    let cells = spec.rayleigh.iter().map(|&ra| (spec.gammas[0], spec.betas[0], ra, spec.meshes[0])).collect();
    let rows = compare(spec, ctx, cells, make)?;
    Ok(ComparisonReport { id: spec.id, modes: spec.modes.clone(), rows, forcing_residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementRow {
    pub pair: ElementPair,
    pub family: MeshFamily,
    pub gamma: f64,
    /// Standard grad-div; with `gamma = 0` this is the unstabilized method.
    pub standard: MmsNorms,
    /// Absent for `gamma = 0`.
    pub modular: Option<MmsNorms>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementReport {
    pub rows: Vec<ElementRow>,
    pub warnings: Vec<String>,
    pub forcing_residual: f64,
}

impl ElementReport {
    pub fn row(&self, pair: ElementPair, family: MeshFamily, gamma: f64) -> Option<&ElementRow> {
        self.rows.iter().find(|r| r.pair == pair && r.family == family && r.gamma == gamma)
    }

    pub fn table(&self) -> Table {
        let mut headers = vec!["Element".to_string(), "Mesh".into(), "gamma".into()];
        for (name, _) in NORMS {
            headers.push(col::method(name, "standard"));
            headers.push(col::method(name, "modular"));
        }
        let mut table = Table::new(ExperimentId::ElementStudy.caption(), headers);
        for r in &self.rows {
            let mut cells = vec![
                Cell::Text(format!("({}, {}, {})", r.pair.velocity(), r.pair.pressure(), r.pair.velocity())),
                Cell::Text(r.family.as_str().into()),
                Cell::Num(r.gamma),
            ];
            for (_, f) in NORMS {
                cells.push(Cell::Num(f(&r.standard)));
                cells.push(Cell::opt(r.modular.as_ref().map(f)));
            }
            table.push(cells);
        }
        table
    }
}

fn family_mesh(n: usize, family: MeshFamily) -> Result<Arc<Mesh>> {
    let base = unit_square(n)?;
    Ok(match family {
        MeshFamily::Uniform => base,
        MeshFamily::Barycentric => Arc::new(barycentric_refine(&base)?),
    })
}

/// Standard and modular grad-div over `pair x family x gamma` at one Rayleigh
/// number.
pub fn run_element_study(spec: &ExperimentSpec, ctx: &RunContext) -> Result<ElementReport> {
    let ri = richardson(spec, spec.rayleigh[0]);
    let ms = ManufacturedSolution::new(spec.nu(), spec.kappa(), ri);
    let forcing_residual = forcing_oracle(spec, &ms, ctx)?;
    let beta = spec.betas[0];
    let mut warnings = Vec::new();
    let mut cells = Vec::new();
    for &pair in &spec.pairs {
        for &family in &spec.families {
            let mesh = family_mesh(spec.meshes[0], family)?;
            if let Some(w) = pair.compatibility_warning(&mesh) {
                let w = format!("{}: {pair} on {} mesh: {w}", spec.id, family.as_str());
                ctx.log(format!("warning: {w}"));
                warnings.push(w);
            }
            for &g in &spec.gammas {
                cells.push((pair, family, g, mesh.clone()));
            }
        }
    }
    let rows = cells
        .par_iter()
        .map(|(pair, family, gamma, mesh)| {
            let run = |mode| {
                let cfg = SolverConfig { pair: *pair, ..mms_config(spec, ri, mode, *gamma, beta) };
                run_manufactured(mesh.clone(), cfg, &ms)
            };
            let standard = run(StabilizationMode::Standard)?;
            let modular = if *gamma > 0.0 { Some(run(StabilizationMode::Modular)?) } else { None };
            ctx.log(format!("{}: {pair} {} gamma = {gamma:e} done", spec.id, family.as_str()));
            Ok(ElementRow { pair: *pair, family: *family, gamma: *gamma, standard, modular })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ElementReport { rows, warnings, forcing_residual })
}
