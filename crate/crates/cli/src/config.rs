use std::fmt;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use bouss_core::boussinesq::StabilizationMode;
use bouss_core::fem::ElementPair;

/// The experiments the command line can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    SpatialRates,
    TemporalRates,
    PressureRobust,
    RayleighSweep,
    ElementStudy,
    Marsigli,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        Self::SpatialRates,
        Self::TemporalRates,
        Self::PressureRobust,
        Self::RayleighSweep,
        Self::ElementStudy,
        Self::Marsigli,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SpatialRates => "spatial-rates",
            Self::TemporalRates => "temporal-rates",
            Self::PressureRobust => "pressure-robust",
            Self::RayleighSweep => "rayleigh-sweep",
            Self::ElementStudy => "element-study",
            Self::Marsigli => "marsigli",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.as_str() == s.trim())
    }

    /// Caption written as the first line of the CSV and the console table.
    pub fn caption(self) -> &'static str {
        match self {
            Self::SpatialRates => "Table 1: spatial velocity errors and rates",
            Self::TemporalRates => "Table 2: temporal velocity errors and rates",
            Self::PressureRobust => "Table 3: velocity errors and divergence for large pressure",
            Self::RayleighSweep => "Table 4: velocity errors and divergence with varying Ra",
            Self::ElementStudy => "Table 5: velocity errors and divergence with varying gamma",
            Self::Marsigli => "Marsigli lock exchange: norm time series",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Mesh family of the element study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshFamily {
    /// Uniform mesh with every triangle split at its barycenter.
    Barycentric,
    /// The uniform mesh itself.
    Uniform,
}

impl MeshFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Barycentric => "bc",
            Self::Uniform => "nbc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bc" => Some(Self::Barycentric),
            "nbc" => Some(Self::Uniform),
            _ => None,
        }
    }
}

/// Everything that determines one experiment. Two runs of the same spec
/// produce identical CSV files.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    /// Subdivisions per unit length of the unit-square meshes (`h = 1/n`).
    pub meshes: Vec<usize>,
    pub dts: Vec<f64>,
    pub t_end: f64,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Rayleigh numbers; `Ri = Ra / (Re^2 Pr)`.
    pub rayleigh: Vec<f64>,
    /// Used where no Rayleigh list applies.
    pub richardson: f64,
    pub reynolds: f64,
    pub prandtl: f64,
    pub pairs: Vec<ElementPair>,
    pub families: Vec<MeshFamily>,
    pub modes: Vec<StabilizationMode>,
    pub pressure_amplitude: f64,
    /// Impose velocity Dirichlet data on the grad-div correction.
    pub correction_dirichlet: bool,
    /// Cells of the Marsigli box, `nx x ny`.
    pub grid: (usize, usize),
    pub snapshot_times: Vec<f64>,
    /// Points of the forcing oracle run before manufactured-solution runs.
    pub forcing_points: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    /// Built-in configuration of `id`. `full` restores the expensive rows.
    pub fn defaults(id: ExperimentId, full: bool) -> Self {
        let base = Self {
            id,
            meshes: vec![4, 8, 16, 32],
            dts: vec![1e-4],
            t_end: 1e-3,
            gammas: vec![1.0],
            betas: vec![1.0],
            rayleigh: vec![],
            richardson: 1.0,
            reynolds: 1.0,
            prandtl: 1.0,
            pairs: vec![ElementPair::P2P1],
            families: vec![MeshFamily::Uniform],
            modes: vec![StabilizationMode::Modular],
            pressure_amplitude: 1.0,
            correction_dirichlet: false,
            grid: (0, 0),
            snapshot_times: vec![],
            forcing_points: 20,
            seed: 20240601,
        };
        match id {
            ExperimentId::SpatialRates => Self {
                meshes: if full { vec![4, 8, 16, 32, 64] } else { vec![4, 8, 16, 32] },
                ..base
            },
            ExperimentId::TemporalRates => Self {
                meshes: vec![if full { 64 } else { 32 }],
                dts: vec![1.0 / 4.0, 1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
                t_end: 1.0,
                ..base
            },
            ExperimentId::PressureRobust => Self {
                meshes: vec![2, 4, 8, 16, 32],
                dts: vec![0.01 / 8.0],
                t_end: 0.01,
                gammas: vec![1e5],
                betas: vec![0.0],
                rayleigh: vec![100.0],
                pressure_amplitude: 1000.0,
                modes: StabilizationMode::ALL.to_vec(),
                ..base
            },
            ExperimentId::RayleighSweep => Self {
                meshes: vec![32],
                dts: vec![0.1 / 32.0],
                t_end: 0.1,
                gammas: vec![1e5],
                betas: vec![0.0],
                rayleigh: vec![1.0, 1e1, 1e2, 1e3, 1e4, 1e5],
                modes: StabilizationMode::ALL.to_vec(),
                ..base
            },
            ExperimentId::ElementStudy => Self {
                meshes: vec![8],
                dts: vec![0.1 / 32.0],
                t_end: 0.1,
                gammas: vec![0.0, 1.0, 1e1, 1e2, 1e3, 1e4, 1e5],
                betas: vec![0.0],
                rayleigh: vec![1e6],
                pairs: vec![ElementPair::P2P1, ElementPair::P2P0],
                families: vec![MeshFamily::Barycentric, MeshFamily::Uniform],
                modes: vec![StabilizationMode::Standard, StabilizationMode::Modular],
                ..base
            },
            ExperimentId::Marsigli => Self {
                meshes: vec![],
                dts: vec![0.025],
                t_end: 8.0,
                richardson: 4.0,
                reynolds: 1000.0,
                modes: vec![StabilizationMode::Modular, StabilizationMode::Standard, StabilizationMode::None],
                correction_dirichlet: true,
                grid: if full { (160, 20) } else { (80, 10) },
                snapshot_times: vec![2.0, 4.0, 8.0],
                ..base
            },
        }
    }

    /// Defaults of `id` overridden by the `key = value` lines of `text`.
    pub fn parse(id: ExperimentId, full: bool, text: &str) -> Result<Self> {
        let mut spec = Self::defaults(id, full);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            spec.set(key.trim(), value.trim()).with_context(|| format!("line {}", lineno + 1))?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(id: ExperimentId, full: bool, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(id, full, &text).with_context(|| format!("in {}", path.display()))
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => {
                let id = ExperimentId::parse(value).ok_or_else(|| anyhow!("unknown experiment `{value}`"))?;
                if id != self.id {
                    bail!("config is for `{id}` but `{}` was requested", self.id);
                }
            }
            "meshes" => self.meshes = list(value, parse_usize)?,
            "dts" => self.dts = list(value, parse_number)?,
            "t_end" => self.t_end = parse_number(value)?,
            "gammas" => self.gammas = list(value, parse_number)?,
            "betas" => self.betas = list(value, parse_number)?,
            "rayleigh" => self.rayleigh = list(value, parse_number)?,
            "richardson" => self.richardson = parse_number(value)?,
            "reynolds" => self.reynolds = parse_number(value)?,
            "prandtl" => self.prandtl = parse_number(value)?,
            "pairs" => {
                self.pairs = list(value, |s| ElementPair::parse(s).ok_or_else(|| anyhow!("unknown element pair `{s}`")))?
            }
            "mesh_families" => {
                self.families = list(value, |s| MeshFamily::parse(s).ok_or_else(|| anyhow!("unknown mesh family `{s}`")))?
            }
            "modes" => {
                self.modes =
                    list(value, |s| StabilizationMode::parse(s).ok_or_else(|| anyhow!("unknown mode `{s}`")))?
            }
            "pressure_amplitude" => self.pressure_amplitude = parse_number(value)?,
            "correction_dirichlet" => {
                self.correction_dirichlet = value.parse().map_err(|_| anyhow!("expected true or false"))?
            }
            "grid" => {
                let (a, b) = value.split_once('x').ok_or_else(|| anyhow!("grid must look like `80x10`"))?;
                self.grid = (parse_usize(a)?, parse_usize(b)?);
            }
            "snapshot_times" => self.snapshot_times = list(value, parse_number)?,
            "forcing_points" => self.forcing_points = parse_usize(value)?,
            "seed" => self.seed = value.parse().map_err(|_| anyhow!("bad seed `{value}`"))?,
            _ => bail!("unknown key `{key}`"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let id = self.id;
        let needs_meshes = id != ExperimentId::Marsigli;
        if needs_meshes && self.meshes.is_empty() {
            bail!("{id}: mesh list is empty");
        }
        if self.meshes.contains(&0) {
            bail!("{id}: mesh subdivisions must be positive");
        }
        if self.dts.is_empty() {
            bail!("{id}: time step list is empty");
        }
        if id != ExperimentId::TemporalRates && self.dts.len() != 1 {
            bail!("{id}: exactly one time step expected, got {}", self.dts.len());
        }
        if self.gammas.is_empty() || self.betas.is_empty() {
            bail!("{id}: gamma and beta lists must be nonempty");
        }
        match id {
            ExperimentId::RayleighSweep | ExperimentId::ElementStudy if self.rayleigh.is_empty() => {
                bail!("{id}: Rayleigh list is empty")
            }
            ExperimentId::PressureRobust if self.rayleigh.len() != 1 => {
                bail!("{id}: exactly one Rayleigh number expected")
            }
            ExperimentId::ElementStudy if self.pairs.is_empty() || self.families.is_empty() => {
                bail!("{id}: element pair and mesh family lists must be nonempty")
            }
            ExperimentId::Marsigli if self.grid.0 == 0 || self.grid.1 == 0 => bail!("{id}: grid must be positive"),
            _ => {}
        }
        if self.modes.is_empty() {
            bail!("{id}: mode list is empty");
        }
        if !(self.reynolds > 0.0 && self.prandtl > 0.0) {
            bail!("{id}: Reynolds and Prandtl numbers must be positive");
        }
        if self.rayleigh.iter().chain(&self.dts).chain(&self.gammas).chain(&self.betas).any(|v| !v.is_finite()) {
            bail!("{id}: non-finite parameter");
        }
        if self.forcing_points == 0 && id != ExperimentId::Marsigli {
            bail!("{id}: the forcing oracle needs at least one point");
        }
        Ok(())
    }

    /// `nu = 1/Re`.
    pub fn nu(&self) -> f64 {
        1.0 / self.reynolds
    }

    /// `kappa = 1/(Re Pr)`.
    pub fn kappa(&self) -> f64 {
        1.0 / (self.reynolds * self.prandtl)
    }
}

fn list<T>(value: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|s| item(s.trim())).collect()
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| anyhow!("expected a non-negative integer, got `{s}`"))
}

/// A number, or a quotient `a/b` of two numbers such as `1/64` or `0.1/32`.
pub fn parse_number(s: &str) -> Result<f64> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| anyhow!("expected a number, got `{s}`"));
    match s.split_once('/') {
        Some((a, b)) => {
            let d = num(b)?;
            if d == 0.0 {
                bail!("division by zero in `{s}`");
            }
            Ok(num(a)? / d)
        }
        None => num(s),
    }
}
