//! Experiment configuration: a flat, versioned TOML document.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::asymptotics::laws::{closed_form_laws, Scenario};
use crate::initial::DecayFamily;
use crate::radial::{Grading, RadialGrid};
use crate::solver::{Scheme, SolverConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {err}")]
    Io { path: String, err: std::io::Error },
    #[error("malformed config: {0}")]
    Syntax(toml::de::Error),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),
}

impl From<toml::de::Error> for ConfigError {
    fn from(e: toml::de::Error) -> Self {
        ConfigError::Syntax(e)
    }
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Initial data from a decay family, normalized to unit mass.
    #[default]
    Family,
    /// `v0 = delta phi_R + epsilon`, compared against `delta phi_R / (1 + delta s)`.
    Separable,
    /// A stationary trace with `K = 0`, injected without solving.
    SyntheticKZero,
}

fn d_grading() -> String {
    "uniform".into()
}
fn d_scheme() -> Scheme {
    Scheme::SemiImplicit
}
fn d_cfl() -> f64 {
    0.5
}
fn d_tol() -> f64 {
    2e-3
}
fn d_ds_init() -> f64 {
    1e-6
}
fn d_spd() -> usize {
    2
}
fn d_snap_min() -> f64 {
    1e-3
}
fn d_one_usize() -> usize {
    1
}
fn d_p_list() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn d_t_count() -> usize {
    400
}
fn d_t_min() -> f64 {
    1.0
}
fn d_slack() -> f64 {
    crate::asymptotics::laws::DEFAULT_LOWER_SLACK
}
fn d_fit_decades() -> f64 {
    1.5
}
fn d_burn_in() -> f64 {
    0.1
}
fn d_r2() -> f64 {
    0.98
}
fn d_exact_tol() -> f64 {
    1e-2
}
fn d_max_steps() -> usize {
    5_000_000
}

/// Every key of the config file. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub mode: Mode,
    pub dim: usize,
    /// Family string such as `algebraic:c0=1,gamma=4`; required in `family` mode.
    #[serde(default)]
    pub family: Option<String>,
    /// Amplitude of the separable profile; defaults to unit mass.
    #[serde(default)]
    pub delta: Option<f64>,
    pub radius: f64,
    pub intervals: usize,
    /// `uniform` or `geometric:<ratio>`.
    #[serde(default = "d_grading")]
    pub grading: String,
    #[serde(default = "d_scheme")]
    pub scheme: Scheme,
    /// Wall value; defaults to `1e-10 * max v0`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "d_cfl")]
    pub cfl_safety: f64,
    #[serde(default = "d_tol")]
    pub accuracy_tol: f64,
    #[serde(default = "d_ds_init")]
    pub ds_init: f64,
    #[serde(default)]
    pub ds_max: Option<f64>,
    pub s_end: f64,
    /// Stop once `H(s)` reaches this `t`.
    #[serde(default)]
    pub t_target: Option<f64>,
    #[serde(default = "d_max_steps")]
    pub max_steps: usize,
    /// Log-spaced snapshots between `snapshot_s_min` and `s_end`; `0` keeps only `s = 0`.
    #[serde(default = "d_spd")]
    pub snapshots_per_decade: usize,
    #[serde(default = "d_snap_min")]
    pub snapshot_s_min: f64,
    #[serde(default = "d_one_usize")]
    pub record_stride: usize,
    #[serde(default = "d_p_list")]
    pub p_list: Vec<f64>,
    #[serde(default = "d_t_count")]
    pub t_count: usize,
    #[serde(default = "d_t_min")]
    pub t_min: f64,
    #[serde(default)]
    pub t_max: Option<f64>,
    /// Overrides the scenario derived from the family, e.g. `exponential:n=1,beta=2,eps=0.75`.
    #[serde(default)]
    pub scenario: Option<String>,
    /// Slack in the lower law when the scenario is derived from the family.
    #[serde(default = "d_slack")]
    pub lower_slack: f64,
    /// Acceptance band for the fitted rate.
    #[serde(default)]
    pub band: Option<[f64; 2]>,
    /// Attained `t` below this makes the verdict inconclusive.
    #[serde(default)]
    pub min_t_max: Option<f64>,
    #[serde(default = "d_fit_decades")]
    pub fit_decades: f64,
    #[serde(default = "d_burn_in")]
    pub burn_in_fraction: f64,
    #[serde(default = "d_r2")]
    pub min_r2: f64,
    /// Relative tolerance against the exact separable solution.
    #[serde(default = "d_exact_tol")]
    pub exact_tol: f64,
    /// Optional wall-value continuation run on the initial data (nonincreasing list).
    #[serde(default)]
    pub continuation_eps: Option<Vec<f64>>,
    #[serde(default)]
    pub continuation_s_end: Option<f64>,
}

pub fn parse_grading(text: &str) -> Result<Grading, ConfigError> {
    let text = text.trim();
    if text == "uniform" {
        return Ok(Grading::Uniform);
    }
    let ratio = text
        .strip_prefix("geometric:")
        .and_then(|r| r.trim().parse::<f64>().ok())
        .ok_or_else(|| invalid("grading", format!("expected `uniform` or `geometric:<ratio>`, got {text:?}")))?;
    Ok(Grading::Geometric(ratio))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|err| ConfigError::Io { path: path.display().to_string(), err })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn family(&self) -> Result<Option<DecayFamily>, ConfigError> {
        self.family.as_deref().map(|f| f.parse::<DecayFamily>().map_err(|e| invalid("family", e.to_string()))).transpose()
    }

    pub fn grid(&self) -> Result<Arc<RadialGrid>, ConfigError> {
        let grading = parse_grading(&self.grading)?;
        RadialGrid::new(self.dim, self.radius, self.intervals, grading).map(Arc::new).map_err(|e| invalid("grid", e.to_string()))
    }

    /// Scenario for the closed-form laws: explicit override, else derived from the family.
    pub fn scenario(&self) -> Result<Option<Scenario>, ConfigError> {
        if let Some(text) = &self.scenario {
            return text.parse().map(Some).map_err(|e: crate::asymptotics::laws::LawError| invalid("scenario", e.to_string()));
        }
        if self.mode != Mode::Family {
            return Ok(None);
        }
        let (n, eps) = (self.dim, self.lower_slack);
        Ok(match self.family()? {
            Some(DecayFamily::Algebraic { gamma, .. }) => Some(Scenario::Algebraic { n, gamma, eps }),
            Some(DecayFamily::Exponential { beta, .. }) => Some(Scenario::Exponential { n, beta, eps }),
            Some(DecayFamily::DoublyExponential { beta, .. }) => Some(Scenario::DoublyExponential { n, beta, eps }),
            _ => None,
        })
    }

    /// Solver settings; `epsilon` must already be resolved.
    pub fn solver_config(&self, epsilon: f64) -> SolverConfig {
        let mut cfg = SolverConfig::new(epsilon, self.s_end);
        cfg.scheme = self.scheme;
        cfg.cfl_safety = self.cfl_safety;
        cfg.accuracy_tol = self.accuracy_tol;
        cfg.ds_init = self.ds_init;
        cfg.ds_max = self.ds_max.unwrap_or(f64::INFINITY);
        cfg.p_list = self.p_list.clone();
        cfg.record_stride = self.record_stride;
        cfg.stop_at_h = self.t_target;
        cfg.max_steps = self.max_steps;
        cfg.snapshot_times = self.snapshot_times();
        cfg
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut times = vec![0.0];
        if self.snapshots_per_decade > 0 && self.snapshot_s_min < self.s_end {
            let decades = (self.s_end / self.snapshot_s_min).log10();
            let count = (decades * self.snapshots_per_decade as f64).ceil() as usize;
            for k in 0..=count {
                let s = (self.snapshot_s_min * 10f64.powf(k as f64 / self.snapshots_per_decade as f64)).min(self.s_end);
                if s > *times.last().unwrap() {
                    times.push(s);
                }
            }
        }
        times
    }

    /// Runs every admissibility check that does not need a solve.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid("schema_version", format!("expected {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        if self.name.trim().is_empty() || self.name.contains(['/', '\\']) {
            return Err(invalid("name", "must be a nonempty plain name"));
        }
        let grid = self.grid()?;
        match (self.mode, self.family()?) {
            (Mode::Family, None) => return Err(invalid("family", "required in family mode")),
            (Mode::Family, Some(f)) => f.validate(self.dim).map_err(|e| invalid("family", e.to_string()))?,
            (_, Some(_)) => return Err(invalid("family", "only used in family mode")),
            _ => {}
        }
        if let Some(d) = self.delta {
            if self.mode != Mode::Separable || !(d > 0.0 && d.is_finite()) {
                return Err(invalid("delta", "positive, separable mode only"));
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(invalid("epsilon", "must be positive"));
            }
            if self.mode != Mode::SyntheticKZero && eps * grid.ball_volume() >= 1.0 {
                return Err(invalid("epsilon", "epsilon times the ball volume must stay below the unit mass"));
            }
        }
        self.solver_config(self.epsilon.unwrap_or(1e-10)).validate().map_err(|e| invalid("solver", e.to_string()))?;
        if !(self.snapshot_s_min > 0.0) {
            return Err(invalid("snapshot_s_min", "must be positive"));
        }
        if let Some(t) = self.t_target {
            if !(t > 0.0) {
                return Err(invalid("t_target", "must be positive"));
            }
        }
        if self.t_count < 2 || !(self.t_min > 0.0) {
            return Err(invalid("t_count", "need t_count >= 2 and t_min > 0"));
        }
        if let Some(t) = self.t_max {
            if !(t > self.t_min) {
                return Err(invalid("t_max", "must exceed t_min"));
            }
        }
        if let Some(scenario) = self.scenario()? {
            closed_form_laws(&scenario).map_err(|e| invalid("scenario", e.to_string()))?;
        }
        if let Some([lo, hi]) = self.band {
            if !(lo <= hi) {
                return Err(invalid("band", "need lower <= upper"));
            }
        }
        if !(self.fit_decades > 0.0) {
            return Err(invalid("fit_decades", "must be positive"));
        }
        if !(self.burn_in_fraction > 0.0 && self.burn_in_fraction <= 1.0) {
            return Err(invalid("burn_in_fraction", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.min_r2) {
            return Err(invalid("min_r2", "must lie in [0, 1]"));
        }
        if !(self.exact_tol > 0.0) {
            return Err(invalid("exact_tol", "must be positive"));
        }
        if let Some(list) = &self.continuation_eps {
            if list.len() < 2 || list.windows(2).any(|w| w[1] > w[0]) || list.iter().any(|e| !(*e > 0.0)) {
                return Err(invalid("continuation_eps", "need at least two positive, nonincreasing values"));
            }
        }
        Ok(())
    }

    /// Copy with one numeric parameter replaced. Family parameters (`gamma`, `alpha`, `beta`, `c0`)
    /// are forwarded to the family string.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self, ConfigError> {
        let mut cfg = self.clone();
        let as_count = |key: &'static str| {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(invalid(key, format!("{value} is not a positive integer")))
            }
        };
        match name {
            "dim" => cfg.dim = as_count("dim")?,
            "intervals" => cfg.intervals = as_count("intervals")?,
            "radius" => cfg.radius = value,
            "epsilon" => cfg.epsilon = Some(value),
            "delta" => cfg.delta = Some(value),
            "s_end" => cfg.s_end = value,
            "t_target" => cfg.t_target = Some(value),
            "accuracy_tol" => cfg.accuracy_tol = value,
            "cfl_safety" => cfg.cfl_safety = value,
            "lower_slack" => cfg.lower_slack = value,
            "gamma" | "alpha" | "beta" | "c0" => {
                let family = self.family()?.ok_or_else(|| ConfigError::UnknownParameter(name.into()))?;
                let updated = family.with_param(name, value).ok_or_else(|| ConfigError::UnknownParameter(name.into()))?;
                cfg.family = Some(updated.to_string());
            }
            _ => return Err(ConfigError::UnknownParameter(name.into())),
        }
        cfg.name = format!("{}_{}{}", self.name, name, crate::io::fmt_g17(value));
        cfg.validate()?;
        Ok(cfg)
    }
}
