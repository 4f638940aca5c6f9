//! Multi-run studies: refinement, parameter sweeps and solve-free prediction tables.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ConfigError, ExperimentConfig, Mode};
use super::run::{run, unit_mass_data, write_outputs, Experiment, RunError, Status};
use crate::asymptotics::laws::{closed_form_laws, LawError, Scenario};
use crate::functionals::lp_identity_residual;
use crate::io::{fmt_g17, write_columns, write_file};
use crate::radial::exact_phi;
use crate::solver::{self, Scheme};

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("a convergence study needs at least two levels, got {0}")]
    TooFewLevels(usize),
    #[error("mode `{0:?}` has nothing to refine")]
    Mode(Mode),
    #[error("sweep needs at least one value")]
    NoValues,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error("t_max must exceed the first tabulated time {0}")]
    Horizon(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub intervals: usize,
    pub dr_max: f64,
    pub steps: usize,
    pub s_end: f64,
    /// Worst relative `L^p` residual, keyed by `p`.
    pub residuals: BTreeMap<String, f64>,
    /// Relative sup error against the separable solution at `s_end`.
    pub exact_error: Option<f64>,
    pub mass_end: f64,
    pub center_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub name: String,
    pub scheme: Scheme,
    pub levels: Vec<Level>,
    /// `log2(e_j / e_{j+1})` of the exact error.
    pub exact_orders: Vec<f64>,
    pub residual_orders: BTreeMap<String, Vec<f64>>,
    /// Orders of successive differences of the final centre value (needs three levels).
    pub self_orders: Vec<f64>,
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Refines `dr` by 2 per level. Explicit steps follow the stability limit; semi-implicit
/// runs halve `accuracy_tol` and `ds_init` per level.
pub fn converge(base: &ExperimentConfig, levels: usize) -> Result<ConvergenceReport, StudyError> {
    if levels < 2 {
        return Err(StudyError::TooFewLevels(levels));
    }
    if base.mode == Mode::SyntheticKZero {
        return Err(StudyError::Mode(base.mode));
    }
    base.validate()?;
    let results = (0..levels)
        .into_par_iter()
        .map(|j| {
            let mut cfg = base.clone();
            cfg.intervals = base.intervals << j;
            if cfg.scheme == Scheme::SemiImplicit {
                cfg.accuracy_tol = base.accuracy_tol / (1 << j) as f64;
                cfg.ds_init = base.ds_init / (1 << j) as f64;
            }
            let setup = unit_mass_data(&cfg)?;
            let mut scfg = cfg.solver_config(setup.epsilon);
            scfg.snapshot_times = vec![0.0, cfg.s_end];
            scfg.stop_at_h = None;
            let trace = solver::solve(&setup.v0, &scfg).map_err(RunError::from)?;
            let residuals =
                trace.lp.iter().map(|l| (fmt_g17(l.p), lp_identity_residual(&trace, l.p).expect("tracked").worst_rel)).collect();
            let last = &trace.snapshots.last().expect("final snapshot").field;
            let exact_error = setup.separable.map(|(delta, _)| {
                let phi = exact_phi(&trace.grid);
                let scale = delta / (1.0 + delta * cfg.s_end);
                let err = last.values().iter().zip(phi.values()).map(|(v, p)| (v - scale * p).abs()).fold(0.0, f64::max);
                err / (scale * phi.max())
            });
            Ok(Level {
                intervals: cfg.intervals,
                dr_max: trace.grid.max_spacing(),
                steps: trace.steps,
                s_end: trace.s_last(),
                residuals,
                exact_error,
                mass_end: *trace.mass.last().unwrap(),
                center_end: *trace.center.last().unwrap(),
            })
        })
        .collect::<Result<Vec<_>, StudyError>>()?;
    let exact: Vec<f64> = results.iter().filter_map(|l| l.exact_error).collect();
    let mut residual_orders = BTreeMap::new();
    for key in results[0].residuals.keys() {
        let series: Vec<f64> = results.iter().map(|l| l.residuals[key]).collect();
        residual_orders.insert(key.clone(), orders(&series));
    }
    let diffs: Vec<f64> = results.windows(2).map(|w| (w[0].center_end - w[1].center_end).abs()).collect();
    Ok(ConvergenceReport {
        name: base.name.clone(),
        scheme: base.scheme,
        exact_orders: if exact.len() == results.len() { orders(&exact) } else { Vec::new() },
        residual_orders,
        self_orders: orders(&diffs),
        levels: results,
    })
}

/// `convergence.json` plus `convergence.csv` (`level,intervals,dr,error,res_<p>...`).
pub fn write_convergence(report: &ConvergenceReport, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let keys: Vec<String> = report.levels[0].residuals.keys().cloned().collect();
    let mut header = vec!["level".to_string(), "intervals".into(), "dr".into(), "error".into()];
    header.extend(keys.iter().map(|k| format!("res_{k}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let level: Vec<f64> = (0..report.levels.len()).map(|j| j as f64).collect();
    let intervals: Vec<f64> = report.levels.iter().map(|l| l.intervals as f64).collect();
    let dr: Vec<f64> = report.levels.iter().map(|l| l.dr_max).collect();
    let err: Vec<f64> = report.levels.iter().map(|l| l.exact_error.unwrap_or(f64::NAN)).collect();
    let res: Vec<Vec<f64>> = keys.iter().map(|k| report.levels.iter().map(|l| l.residuals[k]).collect()).collect();
    let mut columns: Vec<&[f64]> = vec![&level, &intervals, &dr, &err];
    columns.extend(res.iter().map(Vec::as_slice));
    write_file(&dir.join("convergence.csv"), |w| write_columns(w, &header_refs, &columns))?;
    std::fs::write(dir.join("convergence.json"), serde_json::to_string_pretty(report).expect("serializes") + "\n")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub value: f64,
    pub name: String,
    pub status: Option<Status>,
    pub rate: Option<f64>,
    pub stderr: Option<f64>,
    pub r2: Option<f64>,
    pub predicted_upper: Option<f64>,
    pub predicted_lower: Option<f64>,
    pub t_attained: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub param: String,
    pub entries: Vec<SweepEntry>,
    /// Fitted rates strictly increase with the parameter (when every run produced a fit).
    pub strictly_increasing: Option<bool>,
}

pub struct Sweep {
    pub report: SweepReport,
    pub runs: Vec<(f64, Result<Experiment, String>)>,
}

/// Independent runs over `values`, in parallel. Failures are recorded per value.
pub fn sweep(base: &ExperimentConfig, param: &str, values: &[f64]) -> Result<Sweep, StudyError> {
    if values.is_empty() {
        return Err(StudyError::NoValues);
    }
    base.validate()?;
    // Unknown parameters fail the whole sweep; bad values only their own run.
    if let Err(ConfigError::UnknownParameter(p)) = base.with_param(param, values[0]) {
        return Err(ConfigError::UnknownParameter(p).into());
    }
    let runs: Vec<(f64, Result<Experiment, String>)> = values
        .par_iter()
        .map(|&value| {
            let result = base.with_param(param, value).map_err(RunError::from).and_then(|cfg| run(&cfg)).map_err(|e| e.to_string());
            (value, result)
        })
        .collect();
    let entries: Vec<SweepEntry> = runs
        .iter()
        .map(|(value, result)| match result {
            Ok(exp) => {
                let fit = exp.report.fitted.fit.as_ref();
                SweepEntry {
                    value: *value,
                    name: exp.config.name.clone(),
                    status: Some(exp.report.verdict.status),
                    rate: fit.map(|f| f.fit.rate),
                    stderr: fit.map(|f| f.fit.stderr),
                    r2: fit.map(|f| f.fit.r2),
                    predicted_upper: exp.report.predicted.upper.map(|l| l.kind.rate()),
                    predicted_lower: exp.report.predicted.lower.map(|l| l.kind.rate()),
                    t_attained: Some(exp.report.fitted.attained.t_max),
                    error: None,
                }
            }
            Err(e) => SweepEntry {
                value: *value,
                name: format!("{}_{}{}", base.name, param, fmt_g17(*value)),
                status: None,
                rate: None,
                stderr: None,
                r2: None,
                predicted_upper: None,
                predicted_lower: None,
                t_attained: None,
                error: Some(e.clone()),
            },
        })
        .collect();
    let mut by_value: Vec<(f64, Option<f64>)> = entries.iter().map(|e| (e.value, e.rate)).collect();
    by_value.sort_by(|a, b| a.0.total_cmp(&b.0));
    let strictly_increasing = if by_value.len() >= 2 && by_value.iter().all(|(_, r)| r.is_some()) {
        Some(by_value.windows(2).all(|w| w[1].1.unwrap() > w[0].1.unwrap()))
    } else {
        None
    };
    Ok(Sweep { report: SweepReport { param: param.into(), entries, strictly_increasing }, runs })
}

/// One run directory per successful value plus `sweep.json` and `sweep.csv`.
pub fn write_sweep(sweep: &Sweep, dir: &Path) -> Result<(), RunError> {
    let io = |err| RunError::Io { path: dir.display().to_string(), err };
    std::fs::create_dir_all(dir).map_err(io)?;
    for (_, result) in &sweep.runs {
        if let Ok(exp) = result {
            write_outputs(exp, &dir.join(&exp.config.name))?;
        }
    }
    let e = &sweep.report.entries;
    let col = |f: &dyn Fn(&SweepEntry) -> Option<f64>| e.iter().map(|x| f(x).unwrap_or(f64::NAN)).collect::<Vec<f64>>();
    let value = col(&|x| Some(x.value));
    let rate = col(&|x| x.rate);
    let stderr = col(&|x| x.stderr);
    let r2 = col(&|x| x.r2);
    let upper = col(&|x| x.predicted_upper);
    let lower = col(&|x| x.predicted_lower);
    write_file(&dir.join("sweep.csv"), |w| {
        write_columns(
            w,
            &["value", "rate", "stderr", "r2", "predicted_upper", "predicted_lower"],
            &[&value, &rate, &stderr, &r2, &upper, &lower],
        )
    })
    .map_err(io)?;
    std::fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(&sweep.report).expect("serializes") + "\n").map_err(io)
}

/// Columns `t`, upper law, lower law.
pub type LawTable = (Vec<f64>, Vec<f64>, Vec<f64>);

/// Unit-constant law shapes on `count` log-spaced times up to `t_max`.
pub fn prediction_table(scenario: &Scenario, t_max: f64, count: usize) -> Result<LawTable, StudyError> {
    let laws = closed_form_laws(scenario)?;
    let t_lo = laws.lower.window.0.max(1.0);
    if !(t_max > t_lo) || count < 2 {
        return Err(StudyError::Horizon(t_lo));
    }
    let t: Vec<f64> = (0..count).map(|k| t_lo * (t_max / t_lo).powf(k as f64 / (count - 1) as f64)).collect();
    let upper = t.iter().map(|&x| laws.upper.map_or(f64::NAN, |l| l.kind.shape(x))).collect();
    let lower = t.iter().map(|&x| laws.lower.kind.shape(x)).collect();
    Ok((t, upper, lower))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!("schema_version = 1\nname = \"c\"\ndim = 1\n{extra}")).unwrap()
    }

    #[test]
    fn separable_refinement_order() {
        let cfg = config("mode = \"separable\"\nradius = 1.0\nintervals = 20\nscheme = \"explicit\"\nepsilon = 1e-12\ns_end = 1.0\n");
        let rep = converge(&cfg, 3).unwrap();
        assert_eq!(rep.levels.iter().map(|l| l.intervals).collect::<Vec<_>>(), vec![20, 40, 80]);
        assert!(rep.exact_orders.iter().all(|o| (1.7..=2.3).contains(o)), "{rep:?}");
        assert_eq!(rep.residual_orders.len(), 3);
        assert!(matches!(converge(&cfg, 1), Err(StudyError::TooFewLevels(1))));
    }

    #[test]
    fn sweep_records_failures() {
        let cfg =
            config("family = \"algebraic:c0=1,gamma=4\"\nradius = 20.0\nintervals = 80\nepsilon = 1e-12\ns_end = 50.0\nt_count = 50\n");
        let sw = sweep(&cfg, "gamma", &[3.0, 0.5]).unwrap();
        assert!(sw.report.entries[0].error.is_none());
        assert!(sw.report.entries[1].error.is_some());
        assert!(matches!(sweep(&cfg, "gamma", &[]), Err(StudyError::NoValues)));
        assert!(matches!(sweep(&cfg, "colour", &[1.0]), Err(StudyError::Config(ConfigError::UnknownParameter(_)))));
    }

    #[test]
    fn prediction_tables() {
        let (t, up, lo) = prediction_table(&"algebraic:n=1,gamma=4,eps=1".parse().unwrap(), 1e4, 5).unwrap();
        assert_eq!(t.len(), 5);
        assert!((up[4] - 1e4f64.ln()).abs() < 1e-12);
        assert!((lo[4] - 2.0 / 3.0 * 1e4f64.ln()).abs() < 1e-12);
        let (t, up, _) = prediction_table(&"doubly_exponential:n=1,beta=2".parse().unwrap(), 100.0, 3).unwrap();
        assert!((t[0] - std::f64::consts::E).abs() < 1e-12);
        assert!(up.iter().all(|x| x.is_nan()));
        assert!(prediction_table(&"exponential:n=1,beta=2".parse().unwrap(), 0.5, 3).is_err());
    }
}
