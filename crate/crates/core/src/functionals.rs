//! Identities and inequalities of the continuous problem, evaluated as residuals on discrete data.

use serde::Serialize;

use crate::radial::RadialField;
use crate::solver::SolutionTrace;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FunctionalError {
    #[error("trace carries no L^p series for p = {0}")]
    MissingSeries(f64),
    #[error("field mass {0} exceeds 1 + 1e-6")]
    MassHypothesis(f64),
    #[error("series lengths differ: {0} times, {1} values")]
    Length(usize, usize),
}

/// Defect of `int v^p(s) + p^2 int_0^s int v^{p-1}|grad v|^2 = int v0^p` along a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub p: f64,
    pub worst_abs: f64,
    pub worst_rel: f64,
    pub n_samples: usize,
    #[serde(skip)]
    pub series: Vec<f64>,
}

pub fn lp_identity_residual(trace: &SolutionTrace, p: f64) -> Result<IdentityResidual, FunctionalError> {
    let lp = trace.lp_series(p).ok_or(FunctionalError::MissingSeries(p))?;
    let initial = lp.raw[0];
    let series: Vec<f64> = lp.raw.iter().zip(&lp.dissipation).map(|(r, d)| (r + d - initial).abs()).collect();
    let worst_abs = series.iter().copied().fold(0.0, f64::max);
    let worst_rel = if initial != 0.0 { worst_abs / initial.abs() } else { worst_abs };
    Ok(IdentityResidual { p, worst_abs, worst_rel, n_samples: series.len(), series })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Relative slack allowed by [`energy_inequality_check`].
pub const ENERGY_INEQUALITY_TOL: f64 = 1e-2;

/// `(int |grad f|^2)^2 <= int f |Lap f|^2` for fields of mass at most one.
///
/// The wall node is left out of the right-hand side, since its Laplacian is only an extrapolation.
pub fn energy_inequality_check(field: &RadialField) -> Result<EnergyInequality, FunctionalError> {
    let mass = field.integrate();
    if mass > 1.0 + 1e-6 {
        return Err(FunctionalError::MassHypothesis(mass));
    }
    let energy = field.dirichlet_energy();
    let lap = field.laplacian();
    let w = field.grid().quad_weights();
    let interior = w.len() - 1;
    let rhs: f64 = (0..interior).map(|i| w[i] * field.values()[i] * lap.values()[i].powi(2)).sum();
    let lhs = energy * energy;
    Ok(EnergyInequality { lhs, rhs, ok: lhs <= rhs * (1.0 + ENERGY_INEQUALITY_TOL) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub violations: usize,
    pub max_uptick: f64,
    /// Present when the series spans at least three decades.
    pub decays_tenfold: Option<bool>,
}

/// Counts increases of `L` beyond `1e-6` relative plus `1e-12` absolute.
pub fn energy_monotonicity_check(t: &[f64], l: &[f64]) -> Result<MonotonicityReport, FunctionalError> {
    if t.len() != l.len() {
        return Err(FunctionalError::Length(t.len(), l.len()));
    }
    let mut violations = 0;
    let mut max_uptick: f64 = 0.0;
    for w in l.windows(2) {
        let up = w[1] - w[0];
        max_uptick = max_uptick.max(up);
        if up > 1e-6 * w[0].abs() + 1e-12 {
            violations += 1;
        }
    }
    let decays_tenfold = match (t.first(), t.last(), l.first(), l.last()) {
        (Some(&t0), Some(&t1), Some(&l0), Some(&l1)) if t0 <= 0.0 || t1 / t0 >= 1e3 => Some(l1 < l0 / 10.0),
        _ => None,
    };
    Ok(MonotonicityReport { violations, max_uptick, decays_tenfold })
}

/// Whether `s v(0, s)` increases over the last `decades` of recorded `s`.
pub fn center_growth_check(trace: &SolutionTrace, decades: f64) -> bool {
    let s_end = trace.s_last();
    let start = s_end / 10f64.powf(decades);
    let products: Vec<f64> = trace.s.iter().zip(&trace.center).filter(|(s, _)| **s >= start).map(|(s, c)| s * c).collect();
    products.len() >= 2 && products.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12))
}

/// Local power of the mass decay against the two-sided bounds for algebraic data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L1DecayReport {
    pub exponent: f64,
    pub lower: f64,
    pub upper: f64,
    pub slack: f64,
    pub ok: bool,
}

/// Fits `ln mass` against `ln s` over the last decade and compares with
/// `-(gamma - n)/(gamma + 2)` from below and `-(1 - p)/(1 + 2p/n)`, `p = n/gamma + 0.05`, from above.
pub fn l1_decay_sandwich(trace: &SolutionTrace, gamma: f64, slack: f64) -> Option<L1DecayReport> {
    let n = trace.grid.dim() as f64;
    let start = trace.s_last() / 10.0;
    let (x, y): (Vec<f64>, Vec<f64>) =
        trace.s.iter().zip(&trace.mass).filter(|(s, m)| **s >= start && **s > 0.0 && **m > 0.0).map(|(s, m)| (s.ln(), m.ln())).unzip();
    if x.len() < 3 {
        return None;
    }
    let exponent = least_squares_slope(&x, &y);
    let p = n / gamma + 0.05;
    let lower = -(gamma - n) / (gamma + 2.0);
    let upper = -(1.0 - p) / (1.0 + 2.0 * p / n);
    let ok = exponent >= lower - slack && exponent <= upper + slack;
    Some(L1DecayReport { exponent, lower, upper, slack, ok })
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
