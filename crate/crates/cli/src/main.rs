use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use unitmass_core::asymptotics::Scenario;
use unitmass_core::harness::{self, ConfigError, ExperimentConfig, Status};
use unitmass_core::io::{fmt_g17, write_columns};

const FAMILY_HELP: &str = "\
Config files are flat TOML with `schema_version = 1`; unknown keys are rejected.

Family strings:
  family   = kind ':' param { ',' param }
  kind     = 'algebraic' | 'exponential' | 'doubly_exponential'
  param    = name '=' number
  algebraic:           c0 (default 1), gamma          c0 (1 + r)^-gamma
  exponential:         c0, alpha, beta                c0 exp(-alpha r^beta)
  doubly_exponential:  c0, alpha, beta                c0 exp(-alpha exp(r^beta))

Scenario strings (predict):
  algebraic:n=1,gamma=4[,eps=0.25] | exponential:n=1,beta=2[,eps=..] | doubly_exponential:n=1,beta=2[,eps=..]";

#[derive(Parser)]
#[command(name = "unitmass", version, about = "Unit-mass nonlocal diffusion experiments", after_help = FAMILY_HELP)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Refine the grid `levels` times and report observed orders.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun the experiment for each value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the closed-form law shapes without solving.
    Predict {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 50)]
        count: usize,
    },
}

/// Exit status for unusable input.
const EXIT_USAGE: u8 = 2;

fn load(path: &Path) -> std::result::Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::load(path).map_err(|e: ConfigError| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_USAGE)
    })
}

fn status_word(status: Status) -> &'static str {
    match status {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Inconclusive => "INCONCLUSIVE",
    }
}

fn cmd_run(config: &Path, out: &Path) -> Result<ExitCode> {
    let cfg = match load(config) {
        Ok(c) => c,
        Err(code) => return Ok(code),
    };
    let exp = harness::run(&cfg).with_context(|| format!("experiment `{}`", cfg.name))?;
    harness::write_outputs(&exp, out)?;
    let r = &exp.report;
    println!("{}: {} (t attained {})", cfg.name, status_word(r.verdict.status), fmt_g17(r.fitted.attained.t_max));
    if let Some(f) = &r.fitted.fit {
        println!(
            "  {} = {:.4} +/- {:.4}, r2 = {:.4}, window [{}, {}]",
            f.law,
            f.fit.rate,
            f.fit.stderr,
            f.fit.r2,
            fmt_g17(f.fit.window.0),
            fmt_g17(f.fit.window.1)
        );
    }
    for reason in &r.verdict.reasons {
        println!("  {reason}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_converge(config: &Path, levels: usize, out: Option<&Path>) -> Result<ExitCode> {
    let cfg = match load(config) {
        Ok(c) => c,
        Err(code) => return Ok(code),
    };
    if levels < 2 {
        eprintln!("error: --levels must be at least 2");
        return Ok(ExitCode::from(EXIT_USAGE));
    }
    let report = harness::converge(&cfg, levels)?;
    println!("level intervals dr error residuals");
    for (j, l) in report.levels.iter().enumerate() {
        let res: Vec<String> = l.residuals.iter().map(|(p, r)| format!("p={p}:{r:.3e}")).collect();
        let err = l.exact_error.map_or("-".into(), |e| format!("{e:.3e}"));
        println!("{j} {} {:.3e} {err} {}", l.intervals, l.dr_max, res.join(" "));
    }
    if !report.exact_orders.is_empty() {
        println!("exact-error orders: {:?}", report.exact_orders);
    }
    for (p, o) in &report.residual_orders {
        println!("residual orders p={p}: {o:?}");
    }
    if let Some(dir) = out {
        harness::write_convergence(&report, dir)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(config: &Path, param: &str, values: &[f64], out: Option<&Path>) -> Result<ExitCode> {
    let cfg = match load(config) {
        Ok(c) => c,
        Err(code) => return Ok(code),
    };
    if values.is_empty() {
        eprintln!("error: --values is empty");
        return Ok(ExitCode::from(EXIT_USAGE));
    }
    let sweep = match harness::sweep(&cfg, param, values) {
        Err(harness::StudyError::Config(e)) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_USAGE));
        }
        other => other?,
    };
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(format!("{}_sweep_{param}", cfg.name)));
    harness::write_sweep(&sweep, &dir)?;
    for e in &sweep.report.entries {
        match (&e.error, e.rate) {
            (Some(err), _) => println!("{param}={}: error: {err}", fmt_g17(e.value)),
            (None, Some(rate)) => println!("{param}={}: rate {rate:.4} (r2 {:.4})", fmt_g17(e.value), e.r2.unwrap_or(f64::NAN)),
            (None, None) => println!("{param}={}: no fit", fmt_g17(e.value)),
        }
    }
    if let Some(inc) = sweep.report.strictly_increasing {
        println!("rates strictly increasing: {inc}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_predict(scenario: &str, tmax: f64, count: usize) -> Result<ExitCode> {
    let scenario: Scenario = match scenario.parse() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_USAGE));
        }
    };
    let (t, upper, lower) = match harness::prediction_table(&scenario, tmax, count) {
        Ok(table) => table,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_USAGE));
        }
    };
    let stdout = std::io::stdout();
    write_columns(stdout.lock(), &["t", "E_pred_upper", "E_pred_lower"], &[&t, &upper, &lower])?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Run { config, out } => cmd_run(config, out),
        Command::Converge { config, levels, out } => cmd_converge(config, *levels, out.as_deref()),
        Command::Sweep { config, param, values, out } => cmd_sweep(config, param, values, out.as_deref()),
        Command::Predict { scenario, tmax, count } => cmd_predict(scenario, *tmax, *count),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
