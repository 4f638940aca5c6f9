//! The change of variables taking the local trace `v(., s)` to the unit-mass solution `u(., t)`.
//!
//! `H(s) = int_0^s mass`, `h = H^{-1}`, `g(t) = 1 / mass(h(t))`, `u = g v(h)`,
//! `L(t) = g^2 K(h)` and the cumulated energy `E(t) = ln g(t)`.

use serde::Serialize;

use crate::functionals::{lp_identity_residual, FunctionalError};
use crate::interp::{InterpError, MonotoneCubic};
use crate::radial::RadialField;
use crate::solver::SolutionTrace;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransformError {
    #[error("initial mass {0} is not 1 within 1e-3")]
    NotUnitMass(f64),
    #[error("mass is not positive at s = {0}")]
    NonPositiveMass(f64),
    #[error("mass and energy balance disagree: worst relative residual {0} exceeds 1e-2")]
    MassEnergyMismatch(f64),
    #[error("t = {t} is outside the covered range [0, {t_max}]")]
    OutOfCoverage { t: f64, t_max: f64 },
    #[error("time grid is empty: t_min = {t_min} but only t <= {t_max} is covered")]
    EmptyTimeGrid { t_min: f64, t_max: f64 },
    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

/// Output times: `0` followed by `count` log-spaced values in `[t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub count: usize,
    pub t_min: f64,
    /// Defaults to the attained `H(s_end)`.
    pub t_max: Option<f64>,
}

impl TimeGrid {
    pub fn new(count: usize, t_min: f64, t_max: Option<f64>) -> Self {
        TimeGrid { count, t_min, t_max }
    }
}

#[derive(Debug, Clone)]
pub struct TransformTables {
    pub s_nodes: Vec<f64>,
    pub hprime: Vec<f64>,
    /// `mass(0) - int_0^s K`, the energy-based version of `H'`.
    pub hprime_energy: Vec<f64>,
    pub big_h: Vec<f64>,
    pub big_g: Vec<f64>,
    pub t_nodes: Vec<f64>,
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    pub e: Vec<f64>,
    pub l: Vec<f64>,
    /// `H(s_end)`, the largest reachable `t`.
    pub t_attained: f64,
    pub truncated: bool,
    h_of_s: MonotoneCubic,
    mass_of_s: MonotoneCubic,
    energy_of_s: MonotoneCubic,
    g_of_t: MonotoneCubic,
}

pub fn build_tables(trace: &SolutionTrace, grid: &TimeGrid) -> Result<TransformTables, TransformError> {
    let mass0 = trace.mass[0];
    if (mass0 - 1.0).abs() > 1e-3 {
        return Err(TransformError::NotUnitMass(mass0));
    }
    if let Some(k) = trace.mass.iter().position(|m| !(*m > 0.0)) {
        return Err(TransformError::NonPositiveMass(trace.s[k]));
    }
    let balance = lp_identity_residual(trace, 1.0)?;
    if balance.worst_rel > 1e-2 {
        return Err(TransformError::MassEnergyMismatch(balance.worst_rel));
    }
    if grid.count < 2 || !(grid.t_min > 0.0) {
        return Err(TransformError::InvalidTimeGrid("need count >= 2 and t_min > 0".into()));
    }
    let s_nodes = trace.s.clone();
    let hprime = trace.mass.clone();
    let dissipated = &trace.lp_series(1.0).expect("p = 1 is always tracked").dissipation;
    let hprime_energy = dissipated.iter().map(|d| mass0 - d).collect();
    let big_h = trace.mass_integral.clone();
    let big_g = hprime.iter().map(|m| 1.0 / m).collect();
    let h_of_s = MonotoneCubic::with_slopes(s_nodes.clone(), big_h.clone(), hprime.clone())?;
    let mass_of_s = MonotoneCubic::new(s_nodes.clone(), hprime.clone())?;
    let energy_of_s = MonotoneCubic::new(s_nodes.clone(), trace.energy.clone())?;

    let t_attained = *big_h.last().unwrap();
    let requested = grid.t_max.unwrap_or(t_attained);
    let truncated = requested > t_attained;
    if truncated {
        log::warn!("requested t_max = {requested} exceeds the attained H(s_end) = {t_attained}; truncating");
    }
    let t_max = requested.min(t_attained);
    if grid.t_min >= t_max {
        return Err(TransformError::EmptyTimeGrid { t_min: grid.t_min, t_max });
    }
    let (a, b) = (grid.t_min.ln(), t_max.ln());
    let mut t_nodes = Vec::with_capacity(grid.count + 1);
    t_nodes.push(0.0);
    t_nodes.extend((0..grid.count).map(|k| (a + (b - a) * k as f64 / (grid.count - 1) as f64).exp()));
    t_nodes[grid.count] = t_max;

    let mut h = Vec::with_capacity(t_nodes.len());
    let mut g = Vec::with_capacity(t_nodes.len());
    let mut e = Vec::with_capacity(t_nodes.len());
    let mut l = Vec::with_capacity(t_nodes.len());
    for &t in &t_nodes {
        let s = h_of_s.invert(t)?;
        let gi = 1.0 / mass_of_s.eval(s);
        h.push(s);
        g.push(gi);
        e.push(gi.ln());
        l.push(gi * gi * energy_of_s.eval(s));
    }
    let g_of_t = MonotoneCubic::new(t_nodes.clone(), g.clone())?;
    Ok(TransformTables {
        s_nodes,
        hprime,
        hprime_energy,
        big_h,
        big_g,
        t_nodes,
        h,
        g,
        e,
        l,
        t_attained,
        truncated,
        h_of_s,
        mass_of_s,
        energy_of_s,
        g_of_t,
    })
}

impl TransformTables {
    pub fn t_max(&self) -> f64 {
        *self.t_nodes.last().unwrap()
    }

    /// `H(s)` from the Hermite interpolant.
    pub fn big_h_at(&self, s: f64) -> f64 {
        self.h_of_s.eval(s)
    }

    /// `h(t)`, valid up to the attained `t`.
    pub fn h_at(&self, t: f64) -> Result<f64, TransformError> {
        if !(0.0..=self.t_attained).contains(&t) {
            return Err(TransformError::OutOfCoverage { t, t_max: self.t_attained });
        }
        Ok(self.h_of_s.invert(t)?)
    }

    /// `g(t) = 1 / mass(h(t))` evaluated directly from the trace interpolants.
    pub fn g_at(&self, t: f64) -> Result<f64, TransformError> {
        Ok(1.0 / self.mass_of_s.eval(self.h_at(t)?))
    }

    /// `L(t) = g^2 K(h)`.
    pub fn l_at(&self, t: f64) -> Result<f64, TransformError> {
        let s = self.h_at(t)?;
        let g = 1.0 / self.mass_of_s.eval(s);
        Ok(g * g * self.energy_of_s.eval(s))
    }

    /// `g(t) * mass(h(t))`, the unit-mass defect as seen through the scalar series.
    pub fn unit_mass_from_series(&self, t: f64) -> Result<f64, TransformError> {
        let g = self.g_of_t.eval(t);
        Ok(g * self.mass_of_s.eval(self.h_at(t)?))
    }
}

/// `E(t) = ln g(t)` from the tabulated `g`.
pub fn energy_e(tables: &TransformTables, t: f64) -> Result<f64, TransformError> {
    if !(0.0..=tables.t_max()).contains(&t) {
        return Err(TransformError::OutOfCoverage { t, t_max: tables.t_max() });
    }
    Ok(tables.g_of_t.eval(t).ln())
}

/// `u(., t) = g(t) v(., h(t))`, interpolating linearly in `s` between stored fields.
pub fn assemble_u(tables: &TransformTables, trace: &SolutionTrace, t: f64) -> Result<RadialField, TransformError> {
    let s = tables.h_at(t)?;
    let snaps = &trace.snapshots;
    let out = || TransformError::OutOfCoverage { t, t_max: tables.t_max() };
    let (first, last) = (snaps.first().ok_or_else(out)?, snaps.last().ok_or_else(out)?);
    let rel = 1e-12 * s.abs().max(f64::MIN_POSITIVE);
    if s < first.s - rel || s > last.s + rel {
        return Err(out());
    }
    let j = snaps.partition_point(|snap| snap.s <= s);
    let g = 1.0 / tables.mass_of_s.eval(s);
    if j == 0 || j == snaps.len() {
        let snap = if j == 0 { first } else { last };
        return Ok(snap.field.scaled(g));
    }
    let (a, b) = (&snaps[j - 1], &snaps[j]);
    let w = (s - a.s) / (b.s - a.s);
    let values = a.field.values().iter().zip(b.field.values()).map(|(x, y)| g * ((1.0 - w) * x + w * y)).collect();
    Ok(RadialField::new(a.field.grid().clone(), values).expect("interpolated field is finite"))
}

/// Discrete checks of the time-change identities on a table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformDiagnostics {
    /// `max |h' - g| / g`, with `h'` from the centred derivative of `ln h`.
    pub hprime_vs_g: f64,
    /// `max |g' - g L| / (g L)`, with `g'/g` from the centred derivative of `ln g`.
    pub gprime_vs_gl: f64,
    /// `max |h(H(s)) - s| / s` over the trace nodes.
    pub h_roundtrip: f64,
    /// `max |ln g - int_0^t L| / ln g` where `ln g > 1e-3`.
    pub energy_cross: f64,
    /// `g` nondecreasing along the table, so `h` is convex.
    pub h_convex: bool,
    /// `E(t)/t` decreasing over the last decade of the table.
    pub e_over_t_decreasing: bool,
}

fn centred_log_derivative(t: &[f64], y: &[f64], i: usize) -> f64 {
    let (t0, t1, t2) = (t[i - 1], t[i], t[i + 1]);
    let (y0, y1, y2) = (y[i - 1].ln(), y[i].ln(), y[i + 1].ln());
    let (h0, h1) = (t1 - t0, t2 - t1);
    // Second-order three-point derivative on a nonuniform stencil.
    (-h1 / (h0 * (h0 + h1))) * y0 + ((h1 - h0) / (h0 * h1)) * y1 + (h0 / (h1 * (h0 + h1))) * y2
}

pub fn diagnostics(tables: &TransformTables) -> TransformDiagnostics {
    let t = &tables.t_nodes;
    let n = t.len();
    let mut hprime_vs_g: f64 = 0.0;
    let mut gprime_vs_gl: f64 = 0.0;
    // Skip the node next to t = 0, where the log stencil would reach h(0) = 0.
    for i in 2..n - 1 {
        let hp = centred_log_derivative(t, &tables.h, i) * tables.h[i];
        hprime_vs_g = hprime_vs_g.max((hp - tables.g[i]).abs() / tables.g[i]);
        let gl = tables.l[i];
        if gl > 0.0 {
            let rate = centred_log_derivative(t, &tables.g, i);
            gprime_vs_gl = gprime_vs_gl.max((rate - gl).abs() / gl);
        }
    }
    let stride = (tables.s_nodes.len() / 2000).max(1);
    let mut h_roundtrip: f64 = 0.0;
    for (k, &s) in tables.s_nodes.iter().enumerate().step_by(stride).skip(1) {
        if let Ok(back) = tables.h_of_s.invert(tables.big_h[k]) {
            h_roundtrip = h_roundtrip.max((back - s).abs() / s);
        }
    }
    // Trapezoid in t on the trace nodes; the output table is too coarse near t = 0.
    let t_end = tables.t_max();
    let energy = tables.energy_of_s.y();
    let l_at = |k: usize| tables.big_g[k] * tables.big_g[k] * energy[k];
    let mut integral = 0.0;
    let mut energy_cross: f64 = 0.0;
    for k in 1..tables.s_nodes.len() {
        if tables.big_h[k] > t_end * (1.0 + 1e-12) {
            break;
        }
        integral += 0.5 * (tables.big_h[k] - tables.big_h[k - 1]) * (l_at(k) + l_at(k - 1));
        let e = tables.big_g[k].ln();
        if e > 1e-3 {
            energy_cross = energy_cross.max((e - integral).abs() / e);
        }
    }
    let h_convex = tables.g.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    let ratios: Vec<f64> = t.iter().zip(&tables.e).filter(|(ti, _)| **ti >= t_end / 10.0).map(|(ti, ei)| ei / ti).collect();
    let e_over_t_decreasing = ratios.windows(2).all(|w| w[1] <= w[0]);
    TransformDiagnostics { hprime_vs_g, gprime_vs_gl, h_roundtrip, energy_cross, h_convex, e_over_t_decreasing }
}
