use anyhow::Result;
use bouss_core::boussinesq::{SolverConfig, StabilizationMode};
use bouss_core::verify::{fit_rates, ManufacturedSolution};
use rayon::prelude::*;

use super::{col, forcing_oracle, run_manufactured, unit_square, MmsNorms, NOISE_FLOOR};
use crate::config::{ExperimentId, ExperimentSpec};
use crate::output::{Cell, RunContext, Table};

type Norm = fn(&MmsNorms) -> f64;

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    /// `h` or `dt`.
    pub param: f64,
    pub norms: MmsNorms,
}

/// Errors on a sequence of halved mesh sizes or time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub id: ExperimentId,
    pub rows: Vec<RateRow>,
    pub forcing_residual: f64,
}

impl RateReport {
    fn column(&self, f: impl Fn(&MmsNorms) -> f64) -> Vec<f64> {
        self.rows.iter().map(|r| f(&r.norms)).collect()
    }

    /// Pairwise rates of one error column; `None` below the noise floor.
    pub fn rates(&self, f: impl Fn(&MmsNorms) -> f64) -> Result<Vec<Option<f64>>> {
        Ok(fit_rates(&self.column(f), NOISE_FLOOR)?)
    }

    /// Rate of the finest pair.
    pub fn finest_rate(&self, f: impl Fn(&MmsNorms) -> f64) -> Option<f64> {
        self.rates(f).ok()?.last().copied().flatten()
    }

    /// Divergence columns are at the solver noise floor in the temporal
    /// study, so no rate is claimed there.
    fn claims_divergence_rates(&self) -> bool {
        self.id == ExperimentId::SpatialRates
    }

    pub fn table(&self) -> Table {
        let with_rates = self.rows.len() >= 2;
        let columns: [(&str, Norm, bool); 4] = [
            (col::U_LINF, |n| n.u_linf, true),
            (col::DIV_LINF, |n| n.div_linf, self.claims_divergence_rates()),
            (col::DIV_L2, |n| n.div_l2, self.claims_divergence_rates()),
            (col::GRAD_UT_L2, |n| n.grad_ut_l2, true),
        ];
        let mut headers = vec![if self.id == ExperimentId::TemporalRates { "dt" } else { "h" }.to_string()];
        for (name, _, _) in &columns {
            headers.push(name.to_string());
            if with_rates {
                headers.push(col::rate(name));
            }
        }
        let mut table = Table::new(self.id.caption(), headers);
        let rates: Vec<Vec<Option<f64>>> = columns
            .iter()
            .map(|(_, f, claimed)| {
                let r = if *claimed { self.rates(f).unwrap_or_default() } else { Vec::new() };
                // first row never has a rate
                std::iter::once(None).chain(r).chain(std::iter::repeat(None)).take(self.rows.len()).collect()
            })
            .collect();
        for (i, row) in self.rows.iter().enumerate() {
            let mut cells = vec![Cell::Num(row.param)];
            for (j, (_, f, _)) in columns.iter().enumerate() {
                cells.push(Cell::Num(f(&row.norms)));
                if with_rates {
                    cells.push(Cell::opt(rates[j][i]));
                }
            }
            table.push(cells);
        }
        table
    }
}

fn manufactured(spec: &ExperimentSpec) -> ManufacturedSolution {
    ManufacturedSolution::new(spec.nu(), spec.kappa(), spec.richardson)
}

fn config(spec: &ExperimentSpec, dt: f64) -> SolverConfig {
    SolverConfig {
        nu: spec.nu(),
        kappa: spec.kappa(),
        ri: spec.richardson,
        gamma: spec.gammas[0],
        beta: spec.betas[0],
        dt,
        t_end: spec.t_end,
        mode: spec.modes.first().copied().unwrap_or(StabilizationMode::Modular),
        correction_dirichlet: spec.correction_dirichlet,
        ..SolverConfig::default()
    }
}

/// Errors and rates over the mesh list at fixed `dt`.
pub fn run_spatial_rates(spec: &ExperimentSpec, ctx: &RunContext) -> Result<RateReport> {
    let ms = manufactured(spec);
    let forcing_residual = forcing_oracle(spec, &ms, ctx)?;
    let dt = spec.dts[0];
    let rows = spec
        .meshes
        .par_iter()
        .map(|&n| {
            let norms = run_manufactured(unit_square(n)?, config(spec, dt), &ms)?;
            ctx.log(format!("{}: h = 1/{n} done in {:.1}s", spec.id, norms.wall_time.as_secs_f64()));
            Ok(RateRow { param: 1.0 / n as f64, norms })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateReport { id: spec.id, rows, forcing_residual })
}

/// Errors and rates over the time-step list on the first mesh.
pub fn run_temporal_rates(spec: &ExperimentSpec, ctx: &RunContext) -> Result<RateReport> {
    let ms = manufactured(spec);
    let forcing_residual = forcing_oracle(spec, &ms, ctx)?;
    let mesh = unit_square(spec.meshes[0])?;
    let rows = spec
        .dts
        .par_iter()
        .map(|&dt| {
            let norms = run_manufactured(mesh.clone(), config(spec, dt), &ms)?;
            ctx.log(format!("{}: dt = {dt} done in {:.1}s", spec.id, norms.wall_time.as_secs_f64()));
            Ok(RateRow { param: dt, norms })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateReport { id: spec.id, rows, forcing_residual })
}
