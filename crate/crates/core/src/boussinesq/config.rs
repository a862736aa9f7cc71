use std::fmt;

use crate::fem::ElementPair;
use crate::mesh::Side;

use super::BoussinesqError;

/// How the divergence error is controlled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StabilizationMode {
    /// Plain Galerkin; `u = u~`.
    None,
    /// `gamma (div u~, div v)` inside the momentum system; `u = u~`.
    Standard,
    /// Separate grad-div correction solve after the momentum system.
    Modular,
}

impl StabilizationMode {
    pub const ALL: [StabilizationMode; 3] = [Self::None, Self::Standard, Self::Modular];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Standard => "standard",
            Self::Modular => "modular",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "no-stab" | "nostab" => Some(Self::None),
            "standard" | "graddiv" | "grad-div" => Some(Self::Standard),
            "modular" => Some(Self::Modular),
            _ => None,
        }
    }
}

impl fmt::Display for StabilizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Physical and numerical parameters of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Kinematic viscosity, `1/Re`.
    pub nu: f64,
    /// Thermal diffusivity, `1/(Re Pr)`.
    pub kappa: f64,
    /// Richardson number.
    pub ri: f64,
    pub gamma: f64,
    pub beta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub mode: StabilizationMode,
    pub pair: ElementPair,
    /// Sides carrying velocity Dirichlet data.
    pub velocity_dirichlet: Vec<Side>,
    /// Sides carrying temperature Dirichlet data; the rest are insulated.
    pub temperature_dirichlet: Vec<Side>,
    /// Impose the velocity Dirichlet data on the modular correction as well.
    /// When `false` the correction is solved over the whole velocity space.
    pub correction_dirichlet: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            kappa: 1.0,
            ri: 1.0,
            gamma: 1.0,
            beta: 1.0,
            dt: 1e-4,
            t_end: 1e-3,
            mode: StabilizationMode::Modular,
            pair: ElementPair::P2P1,
            velocity_dirichlet: Side::ALL.to_vec(),
            temperature_dirichlet: Side::ALL.to_vec(),
            correction_dirichlet: true,
        }
    }
}

/// Relative slack allowed when checking that `T / dt` is an integer.
const STEP_COUNT_RTOL: f64 = 1e-9;

impl SolverConfig {
    /// `Ri = Ra / (Re^2 Pr)`.
    pub fn richardson_from_rayleigh(ra: f64, re: f64, pr: f64) -> f64 {
        ra / (re * re * pr)
    }

    pub fn validate(&self) -> Result<(), BoussinesqError> {
        let bad = |what: &str, v: f64| Err(BoussinesqError::InvalidConfig(format!("{what} = {v}")));
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return bad("nu must be positive: nu", self.nu);
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return bad("kappa must be positive: kappa", self.kappa);
        }
        if !self.ri.is_finite() {
            return bad("ri must be finite: ri", self.ri);
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return bad("gamma must be non-negative: gamma", self.gamma);
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return bad("beta must be non-negative: beta", self.beta);
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("dt must be positive: dt", self.dt);
        }
        self.n_steps().map(|_| ())
    }

    /// `N = T / dt`, which must be a positive integer.
    pub fn n_steps(&self) -> Result<usize, BoussinesqError> {
        let ratio = self.t_end / self.dt;
        let n = ratio.round();
        if !(n >= 1.0) || (ratio - n).abs() > STEP_COUNT_RTOL * n {
            return Err(BoussinesqError::InvalidConfig(format!(
                "t_end / dt = {ratio} is not a positive integer (t_end = {}, dt = {})",
                self.t_end, self.dt
            )));
        }
        Ok(n as usize)
    }

    /// `t^n = n dt`, computed without accumulation.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}
