//! Experiment configuration: a single JSON document per run.
//!
//! Parsing is strict (unknown fields are rejected) and every semantic check
//! reports the dotted path of the offending field.

use crate::error::CliError;
use qbm_core::grid::{GridSpec, Scheme};
use qbm_core::projector::Smearing;
use qbm_core::{GaussianState, PhaseSpaceCell, PhysicalParams, PotentialModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    GaussianVsGrid,
    Equilibrium,
    HbarSweep,
    ProjectorQuality,
    ProjectorTransport,
    HistoriesTwoTime,
    HistoriesNTime,
    AreaGrowth,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::GaussianVsGrid,
        Scenario::Equilibrium,
        Scenario::HbarSweep,
        Scenario::ProjectorQuality,
        Scenario::ProjectorTransport,
        Scenario::HistoriesTwoTime,
        Scenario::HistoriesNTime,
        Scenario::AreaGrowth,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Scenario::GaussianVsGrid => "gaussian_vs_grid",
            Scenario::Equilibrium => "equilibrium",
            Scenario::HbarSweep => "hbar_sweep",
            Scenario::ProjectorQuality => "projector_quality",
            Scenario::ProjectorTransport => "projector_transport",
            Scenario::HistoriesTwoTime => "histories_two_time",
            Scenario::HistoriesNTime => "histories_n_time",
            Scenario::AreaGrowth => "area_growth",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Scenario> {
        Scenario::ALL.into_iter().find(|s| s.tag() == tag)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "one")]
    pub mass: f64,
    pub gamma: f64,
    #[serde(rename = "kT")]
    pub kt: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    /// Dekker coefficient, 0 when absent.
    #[serde(default)]
    pub eta: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Free,
    Linear { slope: f64 },
    Harmonic { m_omega2: f64 },
    Quartic { m_omega2: f64, eta4: f64 },
    Polynomial { coeffs: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub sigma: f64,
    /// Defaults to `sigma / 4`, the pure state.
    #[serde(rename = "F", default)]
    pub f: Option<f64>,
    #[serde(default)]
    pub r: f64,
    pub q: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CellConfig {
    Rectangle([f64; 4]),
    Polygon(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_u: usize,
    pub n_s: usize,
    pub l_u: f64,
    pub l_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Final time for trajectory scenarios.
    #[serde(default)]
    pub t_final: Option<f64>,
    /// Step of the grid propagator and of the Gaussian integrator.
    pub dt: f64,
    /// Write every n-th step.
    #[serde(default = "default_every")]
    pub sample_every: usize,
    /// Explicit time list for histories and transport scenarios.
    #[serde(default)]
    pub times: Vec<f64>,
}

fn default_every() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeConfig {
    #[default]
    Strang,
    Lie,
}

impl From<SchemeConfig> for Scheme {
    fn from(s: SchemeConfig) -> Scheme {
        match s {
            SchemeConfig::Strang => Scheme::Strang,
            SchemeConfig::Lie => Scheme::Lie,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmearingConfig {
    pub sigma: f64,
    /// Defaults to `sigma / 4`, maximum resolution.
    #[serde(rename = "F", default)]
    pub f: Option<f64>,
    #[serde(default)]
    pub r: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub hbar: Vec<f64>,
    /// When set, `l_s = max(grid.l_s, l_s_per_sqrt_hbar * sqrt(hbar))`.
    #[serde(default)]
    pub l_s_per_sqrt_hbar: Option<f64>,
    /// Step of the reference Gaussian integration.
    #[serde(default)]
    pub ode_dt: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub params: ParamsConfig,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub initial: Option<StateConfig>,
    #[serde(default)]
    pub cells: Vec<CellConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    pub time: TimeConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub smearing: Option<SmearingConfig>,
    /// Extra smearings compared against `smearing` by `projector_quality`.
    #[serde(default)]
    pub alt_smearings: Vec<SmearingConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    /// Histories: transport the first cell classically to each later time
    /// instead of reading one cell per time from `cells`.
    #[serde(default)]
    pub transport_cells: bool,
    /// Write the final grid operator as a binary snapshot.
    #[serde(default)]
    pub snapshot: bool,
    #[serde(default)]
    pub output: Option<String>,
}

fn field<T>(path: &str, r: qbm_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Field { path: path.to_string(), message: e.to_string() })
}

fn bad(path: &str, message: impl Into<String>) -> CliError {
    CliError::Field { path: path.to_string(), message: message.into() }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let cfg = Self::from_json(&text)?;
        Ok((cfg, text))
    }

    /// Checks every constraint that can be checked without running a solver.
    pub fn validate(&self) -> Result<(), CliError> {
        self.physical_params()?;
        self.potential()?;
        if !(self.time.dt > 0.0) {
            return Err(bad("time.dt", "must be positive"));
        }
        if self.time.sample_every == 0 {
            return Err(bad("time.sample_every", "must be at least 1"));
        }
        if let Some(g) = &self.grid {
            field("grid", GridSpec::new(g.n_u, g.n_s, g.l_u, g.l_s))?;
        }
        if let Some(s) = &self.initial {
            self.state_from(s)?;
        }
        for (i, c) in self.cells.iter().enumerate() {
            field(&format!("cells[{i}]"), cell_from(c))?;
        }
        if let Some(s) = &self.smearing {
            field("smearing", smearing_from(s))?;
        }
        for (i, s) in self.alt_smearings.iter().enumerate() {
            field(&format!("alt_smearings[{i}]"), smearing_from(s))?;
        }
        self.validate_scenario()
    }

    fn validate_scenario(&self) -> Result<(), CliError> {
        use Scenario::*;
        let needs_initial = matches!(
            self.scenario,
            GaussianVsGrid | Equilibrium | HbarSweep | HistoriesTwoTime | HistoriesNTime | AreaGrowth
        );
        let needs_grid = !matches!(self.scenario, AreaGrowth);
        let needs_cells =
            matches!(self.scenario, ProjectorQuality | ProjectorTransport | HistoriesTwoTime | HistoriesNTime);
        let needs_t_final = matches!(self.scenario, GaussianVsGrid | Equilibrium | HbarSweep | AreaGrowth);
        if needs_initial && self.initial.is_none() {
            return Err(bad("initial", format!("required by scenario {}", self.scenario)));
        }
        if needs_grid && self.grid.is_none() {
            return Err(bad("grid", format!("required by scenario {}", self.scenario)));
        }
        if needs_cells && self.cells.is_empty() {
            return Err(bad("cells", format!("scenario {} needs at least one cell", self.scenario)));
        }
        if needs_t_final {
            match self.time.t_final {
                Some(t) if t > 0.0 => {}
                _ => return Err(bad("time.t_final", format!("positive value required by scenario {}", self.scenario))),
            }
        }
        if matches!(self.scenario, ProjectorTransport | HistoriesTwoTime | HistoriesNTime) {
            let t = &self.time.times;
            let min = if self.scenario == ProjectorTransport { 1 } else { 2 };
            if t.len() < min {
                return Err(bad("time.times", format!("scenario {} needs at least {min} times", self.scenario)));
            }
            if t.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || t.windows(2).any(|w| w[1] <= w[0]) {
                return Err(bad("time.times", "must be non-negative and strictly increasing"));
            }
            if self.scenario == HistoriesTwoTime && t.len() != 2 {
                return Err(bad("time.times", "histories_two_time takes exactly two times"));
            }
            let needed = if self.transport_cells { 1 } else { t.len() };
            if matches!(self.scenario, HistoriesTwoTime | HistoriesNTime) && self.cells.len() != needed {
                return Err(bad("cells", format!("expected {needed} cell(s), got {}", self.cells.len())));
            }
        }
        if self.scenario == HbarSweep {
            let s = self.sweep.as_ref().ok_or_else(|| bad("sweep", "required by scenario hbar_sweep"))?;
            if s.hbar.len() < 2 || s.hbar.iter().any(|h| !(*h > 0.0)) {
                return Err(bad("sweep.hbar", "needs at least two positive values"));
            }
        }
        if matches!(self.scenario, HistoriesTwoTime | HistoriesNTime) {
            let g = self.grid.as_ref().expect("checked above");
            if !field("grid", GridSpec::new(g.n_u, g.n_s, g.l_u, g.l_s))?.is_matrix_compatible() {
                return Err(bad("grid", "histories need n_u = n_s and l_s = 2 l_u"));
            }
        }
        Ok(())
    }

    pub fn physical_params(&self) -> Result<PhysicalParams, CliError> {
        let p = &self.params;
        let base = field("params", PhysicalParams::new(p.mass, p.gamma, p.kt, p.hbar))?;
        field("params.eta", base.with_eta(p.eta))
    }

    pub fn potential(&self) -> Result<PotentialModel, CliError> {
        field(
            "potential",
            match &self.potential {
                PotentialConfig::Free => Ok(PotentialModel::Free),
                PotentialConfig::Linear { slope } => Ok(PotentialModel::Linear { slope: *slope }),
                PotentialConfig::Harmonic { m_omega2 } => PotentialModel::harmonic(*m_omega2),
                PotentialConfig::Quartic { m_omega2, eta4 } => PotentialModel::quartic(*m_omega2, *eta4),
                PotentialConfig::Polynomial { coeffs } => PotentialModel::polynomial(coeffs.clone()),
            },
        )
    }

    fn state_from(&self, s: &StateConfig) -> Result<GaussianState, CliError> {
        field("initial", GaussianState::new(s.sigma, s.f.unwrap_or(s.sigma / 4.0), s.r, s.q, s.p))
    }

    pub fn initial_state(&self) -> Result<GaussianState, CliError> {
        let s = self.initial.as_ref().ok_or_else(|| bad("initial", "missing"))?;
        self.state_from(s)
    }

    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        let g = self.grid.as_ref().ok_or_else(|| bad("grid", "missing"))?;
        field("grid", GridSpec::new(g.n_u, g.n_s, g.l_u, g.l_s))
    }

    pub fn cell_list(&self) -> Result<Vec<PhaseSpaceCell>, CliError> {
        self.cells.iter().enumerate().map(|(i, c)| field(&format!("cells[{i}]"), cell_from(c))).collect()
    }

    /// The configured smearing, or maximum resolution with `Sigma = 2`.
    pub fn smearing(&self) -> Result<Smearing, CliError> {
        match &self.smearing {
            Some(s) => field("smearing", smearing_from(s)),
            None => field("smearing", Smearing::max_resolution(2.0)),
        }
    }

    pub fn alt_smearing_list(&self) -> Result<Vec<Smearing>, CliError> {
        self.alt_smearings
            .iter()
            .enumerate()
            .map(|(i, s)| field(&format!("alt_smearings[{i}]"), smearing_from(s)))
            .collect()
    }

    pub fn t_final(&self) -> f64 {
        self.time.t_final.unwrap_or(0.0)
    }
}

fn cell_from(c: &CellConfig) -> qbm_core::Result<PhaseSpaceCell> {
    match c {
        CellConfig::Rectangle([q1, q2, p1, p2]) => PhaseSpaceCell::rectangle(*q1, *q2, *p1, *p2),
        CellConfig::Polygon(v) => PhaseSpaceCell::polygon(v.iter().map(|[q, p]| (*q, *p)).collect()),
    }
}

fn smearing_from(s: &SmearingConfig) -> qbm_core::Result<Smearing> {
    Smearing::new(s.sigma, s.f.unwrap_or(s.sigma / 4.0), s.r)
}

/// SHA-256 of the raw config text, hex encoded.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}
