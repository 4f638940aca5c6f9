//! The solve, functionals, transform, fit and verdict pipeline for one configuration.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::{ConfigError, ExperimentConfig, Mode};
use crate::asymptotics::fit::{fit_log_slope, fit_power, Fit};
use crate::asymptotics::laws::{closed_form_laws, LawKind, PredictedLaw, Scenario};
use crate::continuation::{epsilon_continuation, EpsilonContinuation};
use crate::functionals::{
    center_growth_check, energy_inequality_check, energy_monotonicity_check, l1_decay_sandwich, lp_identity_residual, IdentityResidual,
    L1DecayReport, MonotonicityReport,
};
use crate::initial::{DecayFamily, InitialDataError};
use crate::io::{fmt_g17, fmt_short, write_columns, write_file};
use crate::radial::{exact_phi, RadialField};
use crate::solver::{self, SolutionTrace, SolverError, StopReason};
use crate::transform::{self, build_tables, TimeGrid, TransformDiagnostics, TransformError, TransformTables};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("initial data: {0}")]
    InitialData(InitialDataError),
    #[error("solver: {0}")]
    Solver(SolverError),
    #[error("transform: {0}")]
    Transform(TransformError),
    #[error("writing {path}: {err}")]
    Io { path: String, err: std::io::Error },
}

// Stage errors are wrapped by value, not as a `source`, so a printed error chain
// does not repeat the inner message.
impl From<InitialDataError> for RunError {
    fn from(e: InitialDataError) -> Self {
        RunError::InitialData(e)
    }
}

impl From<SolverError> for RunError {
    fn from(e: SolverError) -> Self {
        RunError::Solver(e)
    }
}

impl From<TransformError> for RunError {
    fn from(e: TransformError) -> Self {
        RunError::Transform(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attained {
    /// `H(s_end)`, the largest `t` the trace covers.
    pub t_max: f64,
    pub t_table_max: f64,
    pub truncated: bool,
    pub s_end: f64,
    pub stop: StopReason,
    pub steps: usize,
    pub halvings: usize,
    pub epsilon: f64,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedLaw {
    /// `log_slope` (E against ln t) or `power` (ln E against ln t).
    pub law: &'static str,
    #[serde(flatten)]
    pub fit: Fit,
    /// First table time where `L` fell below `burn_in_fraction * L(t_min)`.
    pub burn_in_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fitted {
    pub attained: Attained,
    pub fit: Option<FittedLaw>,
    /// Why no fit was made, if none was.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Predicted {
    pub scenario: Option<Scenario>,
    pub upper: Option<PredictedLaw>,
    pub lower: Option<PredictedLaw>,
    pub band: Option<[f64; 2]>,
    /// Closed-form reference used instead of growth laws (`separable`, `zero_energy`).
    pub exact: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitMass {
    /// `max_t |g(t) mass(h(t)) - 1|` over the table.
    pub series_defect: f64,
    /// `max_k |integral u(., H(s_k)) - 1|` over stored fields.
    pub snapshot_defect: f64,
    pub snapshots_checked: usize,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalitySummary {
    pub checked: usize,
    pub failures: usize,
    /// Largest `lhs / rhs`.
    pub worst_ratio: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactComparison {
    /// Relative sup error of `v` against the separable solution, worst over stored fields.
    pub v_linf_rel: f64,
    /// Same, at the last stored field.
    pub v_linf_rel_final: f64,
    /// `max |E - E_exact| / max(1, E_exact)` over the table.
    pub e_rel: f64,
    pub ok: bool,
}

/// `E(t) ln^q(t) / t` over the final half-decade.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogCorrectedFloor {
    pub power_of_log: f64,
    pub window: (f64, f64),
    pub q_start: f64,
    pub q_min: f64,
    pub q_end: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationOutcome {
    pub report: Option<EpsilonContinuation>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residuals {
    pub lp: Vec<IdentityResidual>,
    pub unit_mass: UnitMass,
    /// Upticks over the whole table; its tenfold flag is informational.
    pub monotonicity: MonotonicityReport,
    /// Tenfold decay of `L` across the fit window, present when it spans three decades.
    pub fit_window_decay: Option<bool>,
    pub e_over_t_decreasing: bool,
    pub energy_inequality: InequalitySummary,
    pub transform: TransformDiagnostics,
    pub max_abs_e: f64,
    pub exact: Option<ExactComparison>,
    pub log_corrected: Option<LogCorrectedFloor>,
    pub l1_decay: Option<L1DecayReport>,
    pub center_growth: Option<bool>,
    pub continuation: Option<ContinuationOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub reasons: Vec<String>,
    pub checks: BTreeMap<&'static str, bool>,
}

/// Top-level content of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config_echo: ExperimentConfig,
    pub fitted: Fitted,
    pub predicted: Predicted,
    pub residuals: Residuals,
    pub verdict: Verdict,
}

/// Predicted curves on the table times (without `t = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub t: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

/// Everything a run produced, kept in memory.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub v0: RadialField,
    pub trace: SolutionTrace,
    pub tables: TransformTables,
    pub predictions: Predictions,
    pub report: ExperimentReport,
}

/// Tolerance of the `L^p` balance for accepted runs.
pub const IDENTITY_TOL: f64 = 1e-2;

pub(crate) struct Setup {
    pub v0: RadialField,
    pub epsilon: f64,
    /// `(delta, integral of delta phi)` in separable mode.
    pub separable: Option<(f64, f64)>,
}

pub(crate) fn unit_mass_data(cfg: &ExperimentConfig) -> Result<Setup, RunError> {
    let grid = cfg.grid()?;
    let volume = RadialField::constant(grid.clone(), 1.0).map_err(InitialDataError::from)?.integrate();
    match cfg.mode {
        Mode::Family => {
            let family: DecayFamily = cfg.family()?.expect("validated");
            let wall = family.profile(cfg.radius);
            let base = RadialField::from_fn(grid.clone(), |r| (family.profile(r) - wall).max(0.0)).map_err(InitialDataError::from)?;
            let mass = base.integrate();
            if !(mass > 0.0 && mass.is_finite()) {
                return Err(InitialDataError::NonPositiveMass(mass).into());
            }
            let epsilon = cfg.epsilon.unwrap_or(1e-10 * base.max() / mass);
            let scale = (1.0 - epsilon * volume) / mass;
            let v0 = base.map(|x| x * scale + epsilon).map_err(InitialDataError::from)?;
            Ok(Setup { v0, epsilon, separable: None })
        }
        Mode::Separable => {
            let phi = exact_phi(&grid);
            let phi_mass = phi.integrate();
            let guess_eps = cfg.epsilon.unwrap_or(1e-10 * phi.max() / phi_mass);
            let delta = cfg.delta.unwrap_or((1.0 - guess_eps * volume) / phi_mass);
            let epsilon = cfg.epsilon.unwrap_or(1e-10 * delta * phi.max());
            let v0 = phi.map(|x| delta * x + epsilon).map_err(InitialDataError::from)?;
            Ok(Setup { v0, epsilon, separable: Some((delta, delta * phi_mass)) })
        }
        Mode::SyntheticKZero => {
            let c = 1.0 / volume;
            Ok(Setup { v0: RadialField::constant(grid, c).map_err(InitialDataError::from)?, epsilon: c, separable: None })
        }
    }
}

fn zero_energy_trace(cfg: &ExperimentConfig, v0: RadialField) -> Result<SolutionTrace, SolverError> {
    let lo = cfg.snapshot_s_min.min(cfg.t_min).min(cfg.s_end) / 10.0;
    let count = 200;
    let mut s = vec![0.0];
    s.extend((0..=count).map(|k| lo * (cfg.s_end / lo).powf(k as f64 / count as f64)));
    *s.last_mut().unwrap() = cfg.s_end;
    SolutionTrace::stationary(v0, &s, &cfg.p_list)
}

fn law_fit(kind: Option<LawKind>, t: &[f64], e: &[f64], window: (f64, f64)) -> Result<(&'static str, Fit), String> {
    let result = match kind {
        Some(LawKind::Power { .. }) | Some(LawKind::LogCorrected { .. }) => fit_power(t, e, window).map(|f| ("power", f)),
        _ => fit_log_slope(t, e, window).map(|f| ("log_slope", f)),
    };
    result.map_err(|e| e.to_string())
}

fn fit_window(cfg: &ExperimentConfig, tables: &TransformTables) -> Result<(f64, (f64, f64)), String> {
    let (t, l) = (&tables.t_nodes[1..], &tables.l[1..]);
    let l_ref = l[0];
    let k =
        l.iter().position(|&x| x < cfg.burn_in_fraction * l_ref).ok_or_else(|| "L(t) never drops below the burn-in level".to_string())?;
    let burn_in_t = t[k];
    let t_end = tables.t_max();
    let lo = burn_in_t.max(t_end / 10f64.powf(cfg.fit_decades));
    if lo >= t_end {
        return Err("burn-in consumes the whole table".into());
    }
    Ok((burn_in_t, (lo, t_end)))
}

fn prediction_curve(law: Option<&PredictedLaw>, t0: f64, e0: f64, t: &[f64]) -> Vec<f64> {
    t.iter()
        .map(|&x| match law {
            Some(p) if !(matches!(p.kind, LawKind::LogCorrected { .. }) && x <= 1.0) => p.kind.anchored(t0, e0, x),
            _ => f64::NAN,
        })
        .collect()
}

fn log_corrected_floor(power_of_log: f64, tables: &TransformTables) -> Option<LogCorrectedFloor> {
    let t_end = tables.t_max();
    let lo = t_end / 10f64.sqrt();
    let q: Vec<f64> = tables
        .t_nodes
        .iter()
        .zip(&tables.e)
        .filter(|(t, _)| **t >= lo && **t > 1.0)
        .map(|(t, e)| e * t.ln().powf(power_of_log) / t)
        .collect();
    if q.len() < 2 {
        return None;
    }
    let q_min = q.iter().copied().fold(f64::INFINITY, f64::min);
    let (q_start, q_end) = (q[0], *q.last().unwrap());
    // Bounded below: no collapse toward zero across the half-decade.
    let ok = q_min > 0.0 && q_min >= 0.5 * q_start;
    Some(LogCorrectedFloor { power_of_log, window: (lo, t_end), q_start, q_min, q_end, ok })
}

/// Runs the whole pipeline in memory.
pub fn run(cfg: &ExperimentConfig) -> Result<Experiment, RunError> {
    cfg.validate()?;
    let started = Instant::now();
    let setup = unit_mass_data(cfg)?;
    let mass0 = setup.v0.integrate();
    if (mass0 - 1.0).abs() > 1e-3 {
        let reason = format!("initial mass is {mass0}; the time change needs unit mass (`converge` accepts any delta)");
        return Err(ConfigError::Invalid { key: "delta", reason }.into());
    }
    let scfg = cfg.solver_config(setup.epsilon);
    let trace = match cfg.mode {
        Mode::SyntheticKZero => zero_energy_trace(cfg, setup.v0.clone())?,
        _ => solver::solve(&setup.v0, &scfg)?,
    };
    let tables = build_tables(&trace, &TimeGrid::new(cfg.t_count, cfg.t_min, cfg.t_max))?;
    let diagnostics = transform::diagnostics(&tables);
    let scenario = cfg.scenario()?;
    let laws =
        scenario.as_ref().map(closed_form_laws).transpose().map_err(|e| ConfigError::Invalid { key: "scenario", reason: e.to_string() })?;

    // Fit.
    let (fit, note) = match cfg.mode {
        Mode::Family => match fit_window(cfg, &tables) {
            Ok((burn_in_t, window)) => match law_fit(laws.map(|l| l.lower.kind), &tables.t_nodes[1..], &tables.e[1..], window) {
                Ok((law, fit)) => (Some(FittedLaw { law, fit, burn_in_t }), None),
                Err(e) => (None, Some(e)),
            },
            Err(e) => (None, Some(e)),
        },
        _ => (None, Some("no growth law is fitted in this mode".into())),
    };

    // Residuals.
    let lp = trace.lp.iter().map(|s| lp_identity_residual(&trace, s.p)).collect::<Result<Vec<_>, _>>().map_err(TransformError::from)?;
    let p1 = lp.iter().find(|r| r.p == 1.0).expect("p = 1 tracked").worst_rel;
    let mut series_defect: f64 = 0.0;
    for &t in &tables.t_nodes {
        series_defect = series_defect.max((tables.unit_mass_from_series(t)? - 1.0).abs());
    }
    let mut snapshot_defect: f64 = 0.0;
    let mut checked = 0;
    for snap in &trace.snapshots {
        let t = tables.big_h_at(snap.s);
        if t > tables.t_attained {
            continue;
        }
        let u = transform::assemble_u(&tables, &trace, t)?;
        snapshot_defect = snapshot_defect.max((u.integrate() - 1.0).abs());
        checked += 1;
    }
    let bound = 2.0 * p1 + 1e-12;
    let unit_mass = UnitMass {
        series_defect,
        snapshot_defect,
        snapshots_checked: checked,
        bound,
        ok: series_defect <= bound && snapshot_defect <= bound,
    };
    let monotonicity = energy_monotonicity_check(&tables.t_nodes[1..], &tables.l[1..]).map_err(TransformError::from)?;
    let fit_window_decay = match &fit {
        Some(f) => {
            let (lo, hi) = f.fit.window;
            let idx: Vec<usize> = (1..tables.t_nodes.len()).filter(|&i| tables.t_nodes[i] >= lo && tables.t_nodes[i] <= hi).collect();
            let t: Vec<f64> = idx.iter().map(|&i| tables.t_nodes[i]).collect();
            let l: Vec<f64> = idx.iter().map(|&i| tables.l[i]).collect();
            energy_monotonicity_check(&t, &l).map_err(TransformError::from)?.decays_tenfold
        }
        None => None,
    };
    let mut inequality = InequalitySummary { checked: 0, failures: 0, worst_ratio: 0.0, ok: true };
    for snap in &trace.snapshots {
        let field = snap.field.scaled(1.0 / snap.field.integrate());
        let check = energy_inequality_check(&field).map_err(TransformError::from)?;
        inequality.checked += 1;
        if check.rhs > 0.0 {
            inequality.worst_ratio = inequality.worst_ratio.max(check.lhs / check.rhs);
        }
        if !check.ok {
            inequality.failures += 1;
        }
    }
    inequality.ok = inequality.failures == 0;
    let max_abs_e = tables.e.iter().fold(0.0f64, |m, e| m.max(e.abs()));

    let exact = setup.separable.map(|(delta, m0)| {
        let phi = exact_phi(&trace.grid);
        let (mut worst, mut last) = (0.0f64, 0.0);
        for snap in trace.snapshots.iter().filter(|s| s.s > 0.0) {
            let scale = delta / (1.0 + delta * snap.s);
            let err = snap.field.values().iter().zip(phi.values()).map(|(v, p)| (v - scale * p).abs()).fold(0.0, f64::max);
            last = err / (scale * phi.max());
            worst = worst.max(last);
        }
        let e_rel = tables
            .t_nodes
            .iter()
            .zip(&tables.e)
            .map(|(t, e)| {
                let exact = delta * t / m0 - m0.ln();
                (e - exact).abs() / exact.abs().max(1.0)
            })
            .fold(0.0, f64::max);
        ExactComparison { v_linf_rel: worst, v_linf_rel_final: last, e_rel, ok: worst <= cfg.exact_tol && e_rel <= cfg.exact_tol }
    });

    let log_corrected = match laws.map(|l| l.lower.kind) {
        Some(LawKind::LogCorrected { power_of_log }) => log_corrected_floor(power_of_log, &tables),
        _ => None,
    };
    let (l1_decay, center_growth) = match cfg.family()? {
        Some(DecayFamily::Algebraic { gamma, .. }) => (l1_decay_sandwich(&trace, gamma, 0.1), Some(center_growth_check(&trace, 1.0))),
        Some(_) => (None, Some(center_growth_check(&trace, 1.0))),
        None => (None, None),
    };
    let continuation = cfg.continuation_eps.as_ref().map(|list| {
        let mut c = scfg.clone();
        c.s_end = cfg.continuation_s_end.unwrap_or(cfg.s_end.min(1.0));
        c.stop_at_h = None;
        match epsilon_continuation(&setup.v0, &c, list) {
            Ok(r) => ContinuationOutcome { report: Some(r), error: None },
            Err(e) => ContinuationOutcome { report: None, error: Some(e.to_string()) },
        }
    });

    // Verdict.
    let mut checks: BTreeMap<&'static str, bool> = BTreeMap::new();
    checks.insert("identity_residual", lp.iter().all(|r| r.worst_rel <= IDENTITY_TOL));
    checks.insert("unit_mass", unit_mass.ok);
    checks.insert("energy_inequality", inequality.ok);
    match cfg.mode {
        Mode::Family => {
            checks.insert("energy_monotone", monotonicity.violations == 0);
            if let Some(d) = fit_window_decay {
                checks.insert("energy_decays_tenfold", d);
            }
            checks.insert("e_over_t_decreasing", diagnostics.e_over_t_decreasing);
            if let Some(f) = &log_corrected {
                checks.insert("log_corrected_floor", f.ok);
            }
        }
        Mode::Separable => {
            checks.insert("exact_solution", exact.as_ref().is_some_and(|e| e.ok));
        }
        Mode::SyntheticKZero => {
            checks.insert("zero_energy", max_abs_e <= 1e-12);
        }
    }
    if let Some(c) = &continuation {
        checks.insert("continuation", c.error.is_none());
    }
    let mut reasons: Vec<String> = checks.iter().filter(|(_, ok)| !**ok).map(|(k, _)| format!("check `{k}` failed")).collect();
    let healthy = reasons.is_empty();
    let status = if !healthy {
        Status::Fail
    } else if cfg.mode != Mode::Family {
        Status::Pass
    } else {
        let below_horizon = cfg.min_t_max.is_some_and(|m| tables.t_attained < m);
        match (&fit, cfg.band) {
            _ if below_horizon => {
                reasons.push(format!(
                    "attained t = {} is below the required {}",
                    fmt_g17(tables.t_attained),
                    fmt_g17(cfg.min_t_max.unwrap())
                ));
                Status::Inconclusive
            }
            // The log-corrected floor is the decisive check here and needs no rate fit.
            (None, _) if log_corrected.is_some() => {
                reasons.push(format!("no rate fit ({}); decided by the log-corrected floor", note.clone().unwrap_or_default()));
                Status::Pass
            }
            (None, _) => {
                reasons.push(format!("no fit: {}", note.clone().unwrap_or_default()));
                Status::Inconclusive
            }
            (Some(f), _) if f.fit.r2 < cfg.min_r2 => {
                reasons.push(format!("fit r2 = {:.4} below {}", f.fit.r2, cfg.min_r2));
                Status::Inconclusive
            }
            (Some(f), Some([lo, hi])) => {
                let inside = (lo..=hi).contains(&f.fit.rate);
                checks.insert("rate_in_band", inside);
                if inside {
                    Status::Pass
                } else {
                    reasons.push(format!("fitted rate {:.4} outside [{lo}, {hi}]", f.fit.rate));
                    Status::Fail
                }
            }
            (Some(_), None) => Status::Pass,
        }
    };

    // Predictions on the table times.
    let t_pred = tables.t_nodes[1..].to_vec();
    let predictions = match cfg.mode {
        Mode::Family => {
            let (t0, e0) = match &fit {
                Some(f) => (f.fit.window.0, transform::energy_e(&tables, f.fit.window.0)?),
                None => (t_pred[0], tables.e[1]),
            };
            Predictions {
                upper: prediction_curve(laws.and_then(|l| l.upper).as_ref(), t0, e0, &t_pred),
                lower: prediction_curve(laws.map(|l| l.lower).as_ref(), t0, e0, &t_pred),
                t: t_pred,
            }
        }
        Mode::Separable => {
            let (delta, m0) = setup.separable.expect("separable");
            let e: Vec<f64> = t_pred.iter().map(|t| delta * t / m0 - m0.ln()).collect();
            Predictions { t: t_pred, upper: e.clone(), lower: e }
        }
        Mode::SyntheticKZero => Predictions { upper: vec![0.0; t_pred.len()], lower: vec![0.0; t_pred.len()], t: t_pred },
    };

    let report = ExperimentReport {
        config_echo: cfg.clone(),
        fitted: Fitted {
            attained: Attained {
                t_max: tables.t_attained,
                t_table_max: tables.t_max(),
                truncated: tables.truncated,
                s_end: trace.s_last(),
                stop: trace.stop,
                steps: trace.steps,
                halvings: trace.halvings,
                epsilon: setup.epsilon,
                wall_clock_s: started.elapsed().as_secs_f64(),
            },
            fit,
            note,
        },
        predicted: Predicted {
            scenario,
            upper: laws.and_then(|l| l.upper),
            lower: laws.map(|l| l.lower),
            band: cfg.band,
            exact: match cfg.mode {
                Mode::Family => None,
                Mode::Separable => Some("separable"),
                Mode::SyntheticKZero => Some("zero_energy"),
            },
        },
        residuals: Residuals {
            lp,
            unit_mass,
            monotonicity,
            fit_window_decay,
            e_over_t_decreasing: diagnostics.e_over_t_decreasing,
            energy_inequality: inequality,
            transform: diagnostics,
            max_abs_e,
            exact,
            log_corrected,
            l1_decay,
            center_growth,
            continuation,
        },
        verdict: Verdict { status, reasons, checks },
    };
    Ok(Experiment { config: cfg.clone(), v0: setup.v0, trace, tables, predictions, report })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |err| RunError::Io { path: path.display().to_string(), err }
}

/// Writes `trace.csv`, `tables.csv`, `s_tables.csv`, `predictions.csv`, `report.json` and `snapshots/`.
pub fn write_outputs(exp: &Experiment, dir: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(dir.join("snapshots")).map_err(io_err(dir))?;
    let trace = &exp.trace;

    let mut header: Vec<String> = ["s", "mass", "K", "sup", "center"].iter().map(|s| s.to_string()).collect();
    header.extend(trace.lp.iter().map(|l| format!("lp_{}", fmt_g17(l.p))));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut columns: Vec<&[f64]> = vec![&trace.s, &trace.mass, &trace.energy, &trace.sup, &trace.center];
    columns.extend(trace.lp.iter().map(|l| l.raw.as_slice()));
    let path = dir.join("trace.csv");
    write_file(&path, |w| write_columns(w, &header_refs, &columns)).map_err(io_err(&path))?;

    let t = &exp.tables;
    let path = dir.join("tables.csv");
    write_file(&path, |w| write_columns(w, &["t", "h", "g", "E", "L"], &[&t.t_nodes, &t.h, &t.g, &t.e, &t.l])).map_err(io_err(&path))?;
    let path = dir.join("s_tables.csv");
    write_file(&path, |w| write_columns(w, &["s", "Hprime", "H", "G"], &[&t.s_nodes, &t.hprime, &t.big_h, &t.big_g]))
        .map_err(io_err(&path))?;

    let p = &exp.predictions;
    let path = dir.join("predictions.csv");
    write_file(&path, |w| write_columns(w, &["t", "E_pred_upper", "E_pred_lower"], &[&p.t, &p.upper, &p.lower])).map_err(io_err(&path))?;

    for snap in &trace.snapshots {
        let path = dir.join("snapshots").join(format!("v_s{}.csv", fmt_short(snap.s)));
        write_file(&path, |w| snap.field.write_csv(w)).map_err(io_err(&path))?;
    }

    let path = dir.join("report.json");
    let json = serde_json::to_string_pretty(&exp.report).expect("report serializes");
    std::fs::write(&path, json + "\n").map_err(io_err(&path))?;
    Ok(())
}
