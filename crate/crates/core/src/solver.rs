//! Time integration of `v_s = v Laplacian(v)` on `B_R` with constant wall value `epsilon`.

use std::fmt;
use std::sync::Arc;

use crate::radial::{GridError, RadialField, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Explicit,
    SemiImplicit,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Explicit => "explicit",
            Scheme::SemiImplicit => "semi_implicit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("initial data must be positive and finite (node {0})")]
    NonPositiveData(usize),
    #[error("wall value {value} is below epsilon = {epsilon}")]
    BoundaryBelowEpsilon { value: f64, epsilon: f64 },
    #[error("maximum of v is zero")]
    ZeroMaximum,
    #[error("positivity lost at node {node} (s = {s}, ds = {ds})")]
    PositivityLost { node: usize, s: f64, ds: f64 },
    #[error("tridiagonal solve failed at s = {s}")]
    LinearSolveFailure { s: f64 },
    #[error("time step collapsed to {ds} at s = {s}")]
    StepCollapse { s: f64, ds: f64 },
    #[error("maximum principle violated at node {node}, s = {s}: {value} not in (0, {bound}]")]
    MaxPrincipleViolation { node: usize, s: f64, value: f64, bound: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Parameters for a single solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Constant wall value.
    pub epsilon: f64,
    pub scheme: Scheme,
    /// Fraction of the explicit stability limit.
    pub cfl_safety: f64,
    /// Semi-implicit steps keep `ds * max|v Lap v| <= accuracy_tol * max v`.
    pub accuracy_tol: f64,
    pub ds_init: f64,
    pub ds_max: f64,
    pub s_end: f64,
    /// Sorted times in `[0, s_end]` at which full fields are kept.
    pub snapshot_times: Vec<f64>,
    /// Exponents whose `L^p` balance is tracked; `1` is always added.
    pub p_list: Vec<f64>,
    /// Keep scalar series every `record_stride` accepted steps (snapshots and the end are always kept).
    pub record_stride: usize,
    /// Stop once `integral_0^s mass` reaches this value.
    pub stop_at_h: Option<f64>,
    pub max_steps: usize,
}

impl SolverConfig {
    pub fn new(epsilon: f64, s_end: f64) -> Self {
        SolverConfig {
            epsilon,
            scheme: Scheme::SemiImplicit,
            cfl_safety: 0.5,
            accuracy_tol: 2e-3,
            ds_init: 1e-6,
            ds_max: f64::INFINITY,
            s_end,
            snapshot_times: Vec::new(),
            p_list: vec![1.0],
            record_stride: 1,
            stop_at_h: None,
            max_steps: 5_000_000,
        }
    }

    /// Default wall value for data `v0`.
    pub fn default_epsilon(v0: &RadialField) -> f64 {
        1e-10 * v0.max()
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.to_string()));
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad("cfl_safety must lie in (0, 1]");
        }
        if !(self.accuracy_tol.is_finite() && self.accuracy_tol > 0.0) {
            return bad("accuracy_tol must be positive");
        }
        if !(self.ds_init > 0.0 && self.ds_init <= self.ds_max) {
            return bad("need 0 < ds_init <= ds_max");
        }
        if !(self.s_end.is_finite() && self.s_end > 0.0) {
            return bad("s_end must be positive and finite");
        }
        if self.snapshot_times.windows(2).any(|w| w[1] <= w[0]) {
            return bad("snapshot_times must be strictly increasing");
        }
        if self.snapshot_times.iter().any(|&s| !(0.0..=self.s_end).contains(&s)) {
            return bad("snapshot_times must lie in [0, s_end]");
        }
        if self.p_list.iter().any(|&p| !(p.is_finite() && p > 0.0)) {
            return bad("exponents in p_list must be positive");
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1");
        }
        Ok(())
    }

    fn exponents(&self) -> Vec<f64> {
        let mut ps = self.p_list.clone();
        if !ps.contains(&1.0) {
            ps.push(1.0);
        }
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        ps
    }
}

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EndTime,
    TargetReached,
    StepBudget,
}

/// `integral v^p` and the accumulated dissipation `p^2 int int v^{p-1} |grad v|^2` along `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSeries {
    pub p: f64,
    pub raw: Vec<f64>,
    pub dissipation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub s: f64,
    pub field: RadialField,
}

/// Scalar series along `s` plus stored fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTrace {
    pub grid: Arc<RadialGrid>,
    pub epsilon: f64,
    pub s: Vec<f64>,
    pub mass: Vec<f64>,
    /// Dirichlet energy `K(s)`.
    pub energy: Vec<f64>,
    pub sup: Vec<f64>,
    pub center: Vec<f64>,
    /// Trapezoid accumulation of the mass series at full step resolution.
    pub mass_integral: Vec<f64>,
    pub lp: Vec<LpSeries>,
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    pub halvings: usize,
    pub stop: StopReason,
}

impl SolutionTrace {
    pub fn lp_series(&self, p: f64) -> Option<&LpSeries> {
        self.lp.iter().find(|l| l.p == p)
    }
    pub fn s_last(&self) -> f64 {
        *self.s.last().unwrap()
    }

    /// Trace of a field that does not move: constant data equal to the wall value.
    pub fn stationary(field: RadialField, s_values: &[f64], p_list: &[f64]) -> Result<Self, SolverError> {
        let c = field.values()[0];
        if field.values().iter().any(|&v| v != c) || !(c > 0.0) {
            return Err(SolverError::InvalidConfig("stationary traces need positive constant data".into()));
        }
        if s_values.first() != Some(&0.0) || s_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SolverError::InvalidConfig("s values must start at 0 and increase".into()));
        }
        let k = s_values.len();
        let mass = field.integrate();
        let mut ps = p_list.to_vec();
        if !ps.contains(&1.0) {
            ps.push(1.0);
        }
        let lp = ps
            .iter()
            .map(|&p| Ok(LpSeries { p, raw: vec![field.lp(p)?.raw; k], dissipation: vec![0.0; k] }))
            .collect::<Result<Vec<_>, GridError>>()?;
        Ok(SolutionTrace {
            grid: field.grid().clone(),
            epsilon: c,
            s: s_values.to_vec(),
            mass: vec![mass; k],
            energy: vec![0.0; k],
            sup: vec![c; k],
            center: vec![c; k],
            mass_integral: s_values.iter().map(|s| s * mass).collect(),
            lp,
            snapshots: s_values.iter().map(|&s| Snapshot { s, field: field.clone() }).collect(),
            steps: k - 1,
            halvings: 0,
            stop: StopReason::EndTime,
        })
    }
}

/// Scratch buffers for one time step.
struct Workspace {
    lap: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace { lap: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n], rhs: vec![0.0; n] }
    }
}

enum StepFailure {
    Positivity(usize),
    Linear,
}

fn advance(grid: &RadialGrid, v: &[f64], ds: f64, cfg: &SolverConfig, ws: &mut Workspace, out: &mut [f64]) -> Result<(), StepFailure> {
    let m = grid.intervals();
    let vol = grid.volumes();
    let c = grid.conductance();
    match cfg.scheme {
        Scheme::Explicit => {
            grid.laplacian_into(v, &mut ws.lap);
            for i in 0..m {
                out[i] = v[i] + ds * v[i] * ws.lap[i];
            }
        }
        Scheme::SemiImplicit => {
            // (I - ds diag(v) L) v' = v, wall value moved to the right-hand side; Thomas sweep.
            let mut prev_upper = 0.0;
            let mut prev_rhs = 0.0;
            for i in 0..m {
                let k = ds * v[i] / vol[i];
                let cm = if i > 0 { c[i - 1] } else { 0.0 };
                let lower = -k * cm;
                let mut rhs = v[i];
                let upper = if i + 1 < m {
                    -k * c[i]
                } else {
                    rhs += k * c[i] * cfg.epsilon;
                    0.0
                };
                let pivot = 1.0 + k * (cm + c[i]) - lower * prev_upper;
                if !(pivot > 0.0 && pivot.is_finite()) {
                    return Err(StepFailure::Linear);
                }
                ws.upper[i] = upper / pivot;
                ws.rhs[i] = (rhs - lower * prev_rhs) / pivot;
                prev_upper = ws.upper[i];
                prev_rhs = ws.rhs[i];
                ws.diag[i] = pivot;
            }
            out[m - 1] = ws.rhs[m - 1];
            for i in (0..m - 1).rev() {
                out[i] = ws.rhs[i] - ws.upper[i] * out[i + 1];
            }
        }
    }
    out[m] = cfg.epsilon;
    match out[..m].iter().position(|x| !(*x > 0.0 && x.is_finite())) {
        Some(i) => Err(StepFailure::Positivity(i)),
        None => Ok(()),
    }
}

/// One step of size `ds`.
pub fn step(v: &RadialField, ds: f64, cfg: &SolverConfig) -> Result<RadialField, SolverError> {
    let grid = v.grid();
    let wall = *v.values().last().unwrap();
    if wall < cfg.epsilon * (1.0 - 1e-12) {
        return Err(SolverError::BoundaryBelowEpsilon { value: wall, epsilon: cfg.epsilon });
    }
    if !(ds >= 0.0 && ds.is_finite()) {
        return Err(SolverError::InvalidConfig(format!("step size {ds} must be nonnegative")));
    }
    if ds == 0.0 {
        return Ok(v.clone());
    }
    let mut ws = Workspace::new(grid.len());
    let mut out = vec![0.0; grid.len()];
    advance(grid, v.values(), ds, cfg, &mut ws, &mut out).map_err(|e| match e {
        StepFailure::Positivity(node) => SolverError::PositivityLost { node, s: f64::NAN, ds },
        StepFailure::Linear => SolverError::LinearSolveFailure { s: f64::NAN },
    })?;
    Ok(RadialField::from_parts_unchecked(grid.clone(), out))
}

/// Step size for the configured scheme.
///
/// Explicit: `cfl_safety * min dr^2 / (2 n max v)`, capped at `ds_max`.
/// Semi-implicit: the accuracy bound `accuracy_tol * max v / max |v Lap v|`, limited to
/// `1.1 * previous` (or `ds_init` on the first step) and `ds_max`.
pub fn cfl_timestep(v: &RadialField, cfg: &SolverConfig, previous: Option<f64>) -> Result<f64, SolverError> {
    let mut ws = Workspace::new(v.grid().len());
    timestep(v.grid(), v.values(), cfg, previous, &mut ws)
}

fn timestep(grid: &RadialGrid, v: &[f64], cfg: &SolverConfig, previous: Option<f64>, ws: &mut Workspace) -> Result<f64, SolverError> {
    let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(vmax > 0.0) {
        return Err(SolverError::ZeroMaximum);
    }
    let ds = match cfg.scheme {
        Scheme::Explicit => {
            let dr = grid.min_spacing();
            cfg.cfl_safety * dr * dr / (2.0 * grid.dim() as f64 * vmax)
        }
        Scheme::SemiImplicit => {
            grid.laplacian_into(v, &mut ws.lap);
            let m = grid.intervals();
            let rate = (0..m).map(|i| (v[i] * ws.lap[i]).abs()).fold(0.0, f64::max);
            let accurate = if rate > 0.0 { cfg.accuracy_tol * vmax / rate } else { f64::INFINITY };
            accurate.min(previous.map_or(cfg.ds_init, |p| 1.1 * p))
        }
    };
    Ok(ds.min(cfg.ds_max))
}

/// Dissipation rate `p * omega_n * sum a (v^p_{i+1} - v^p_i)(v_{i+1} - v_i) / dr`.
fn dissipation(grid: &RadialGrid, v: &[f64], vp: &[f64], p: f64) -> f64 {
    p * grid.energy_form(vp, v)
}

struct Tracker {
    ps: Vec<f64>,
    powers: Vec<Vec<f64>>,
    rates: Vec<f64>,
}

impl Tracker {
    fn new(ps: Vec<f64>, n: usize) -> Self {
        let k = ps.len();
        Tracker { ps, powers: vec![vec![0.0; n]; k], rates: vec![0.0; k] }
    }

    /// Fills `v^p`, the raw integrals and the dissipation rates.
    fn measure(&mut self, grid: &RadialGrid, v: &[f64], raw: &mut [f64]) {
        for (k, &p) in self.ps.iter().enumerate() {
            let vp = &mut self.powers[k];
            for (dst, &x) in vp.iter_mut().zip(v) {
                *dst = if p == 1.0 {
                    x
                } else if p == 2.0 {
                    x * x
                } else {
                    x.powf(p)
                };
            }
            raw[k] = grid.integrate_slice(vp);
            self.rates[k] = dissipation(grid, v, vp, p);
        }
    }
}

/// Integrates from `v0` until `s_end`, a target `H`, or the step budget.
pub fn solve(v0: &RadialField, cfg: &SolverConfig) -> Result<SolutionTrace, SolverError> {
    cfg.validate()?;
    let grid = v0.grid().clone();
    let m = grid.intervals();
    if let Some(i) = v0.values().iter().position(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(SolverError::NonPositiveData(i));
    }
    let wall = v0.values()[m];
    if wall < cfg.epsilon * (1.0 - 1e-12) {
        return Err(SolverError::BoundaryBelowEpsilon { value: wall, epsilon: cfg.epsilon });
    }
    let bound = v0.max() * (1.0 + 1e-12);
    let ps = cfg.exponents();
    let np = ps.len();
    let mut tracker = Tracker::new(ps.clone(), grid.len());
    let mut ws = Workspace::new(grid.len());

    let mut v = v0.values().to_vec();
    let mut next = vec![0.0; grid.len()];
    let mut raw = vec![0.0; np];
    tracker.measure(&grid, &v, &mut raw);

    let mut trace = SolutionTrace {
        grid: grid.clone(),
        epsilon: cfg.epsilon,
        s: Vec::new(),
        mass: Vec::new(),
        energy: Vec::new(),
        sup: Vec::new(),
        center: Vec::new(),
        mass_integral: Vec::new(),
        lp: ps.iter().map(|&p| LpSeries { p, raw: Vec::new(), dissipation: Vec::new() }).collect(),
        snapshots: Vec::new(),
        steps: 0,
        halvings: 0,
        stop: StopReason::EndTime,
    };
    let one = ps.iter().position(|&p| p == 1.0).expect("p = 1 tracked");
    let mut s = 0.0;
    let mut h = 0.0;
    let mut cum = vec![0.0; np];
    let record = |trace: &mut SolutionTrace, s: f64, h: f64, v: &[f64], raw: &[f64], cum: &[f64], energy: f64| {
        trace.s.push(s);
        trace.mass.push(raw[one]);
        trace.energy.push(energy);
        trace.sup.push(v.iter().copied().fold(0.0, f64::max));
        trace.center.push(v[0]);
        trace.mass_integral.push(h);
        for k in 0..np {
            trace.lp[k].raw.push(raw[k]);
            trace.lp[k].dissipation.push(cum[k]);
        }
    };
    record(&mut trace, s, h, &v, &raw, &cum, tracker.rates[one]);

    let mut snap_iter = cfg.snapshot_times.iter().copied().peekable();
    if snap_iter.peek() == Some(&0.0) {
        trace.snapshots.push(Snapshot { s: 0.0, field: v0.clone() });
        snap_iter.next();
    }

    let collapse = cfg.ds_init * 1e-6;
    let mut previous: Option<f64> = None;
    let mut since_record = 0usize;
    let mut old_rates = tracker.rates.clone();
    loop {
        if s >= cfg.s_end {
            break;
        }
        if trace.steps >= cfg.max_steps {
            trace.stop = StopReason::StepBudget;
            break;
        }
        let nominal = timestep(&grid, &v, cfg, previous, &mut ws)?;
        let target = snap_iter.peek().copied().unwrap_or(cfg.s_end).min(cfg.s_end);
        let mut ds = nominal;
        let mut landing = false;
        if s + ds >= target * (1.0 - 1e-13) {
            ds = target - s;
            landing = true;
        }
        let mut halvings = 0;
        loop {
            match advance(&grid, &v, ds, cfg, &mut ws, &mut next) {
                Ok(()) => break,
                Err(failure) => {
                    halvings += 1;
                    ds *= 0.5;
                    landing = false;
                    if halvings > 40 || ds < collapse {
                        return Err(match failure {
                            StepFailure::Linear => SolverError::LinearSolveFailure { s },
                            StepFailure::Positivity(node) if halvings > 40 => SolverError::PositivityLost { node, s, ds },
                            StepFailure::Positivity(_) => SolverError::StepCollapse { s, ds },
                        });
                    }
                }
            }
        }
        trace.halvings += halvings;
        if let Some(node) = next.iter().position(|&x| !(x > 0.0 && x <= bound)) {
            return Err(SolverError::MaxPrincipleViolation { node, s: s + ds, value: next[node], bound });
        }
        previous = Some(if halvings > 0 { ds } else { nominal });
        let old_mass = raw[one];
        tracker.measure(&grid, &next, &mut raw);
        for k in 0..np {
            cum[k] += 0.5 * ds * (old_rates[k] + tracker.rates[k]);
        }
        old_rates.copy_from_slice(&tracker.rates);
        h += 0.5 * ds * (old_mass + raw[one]);
        s = if landing { target } else { s + ds };
        std::mem::swap(&mut v, &mut next);
        trace.steps += 1;
        since_record += 1;

        let snapshot_due = landing && snap_iter.peek().is_some_and(|&t| t == target);
        let reached = cfg.stop_at_h.is_some_and(|goal| h >= goal);
        let done = s >= cfg.s_end || reached;
        if snapshot_due || done || since_record >= cfg.record_stride {
            record(&mut trace, s, h, &v, &raw, &cum, tracker.rates[one]);
            since_record = 0;
        }
        if snapshot_due {
            trace.snapshots.push(Snapshot { s, field: RadialField::from_parts_unchecked(grid.clone(), v.clone()) });
            snap_iter.next();
        }
        if reached {
            trace.stop = StopReason::TargetReached;
            break;
        }
    }
    if *trace.s.last().unwrap() != s {
        record(&mut trace, s, h, &v, &raw, &cum, tracker.rates[one]);
    }
    Ok(trace)
}

/// Largest increase of a field from one node to the next, i.e. how far it is from radially nonincreasing.
pub fn radial_monotonicity_defect(field: &RadialField) -> f64 {
    field.values().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{exact_phi, Grading};
    use approx::assert_relative_eq;

    fn grid(n: usize, r: f64, m: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(n, r, m, Grading::Uniform).unwrap())
    }

    fn separable(n: usize, m: usize, eps: f64) -> RadialField {
        exact_phi(&grid(n, 1.0, m)).map(|x| x + eps).unwrap()
    }

    #[test]
    fn timestep_formula() {
        let g = grid(1, 1.0, 10);
        let mut cfg = SolverConfig::new(1e-3, 1.0);
        cfg.scheme = Scheme::Explicit;
        let v = RadialField::constant(g.clone(), 1.0).unwrap();
        assert_relative_eq!(cfl_timestep(&v, &cfg, None).unwrap(), 0.0025, max_relative = 1e-12);
        let half = v.scaled(0.5);
        assert_relative_eq!(cfl_timestep(&half, &cfg, None).unwrap(), 0.005, max_relative = 1e-12);
        cfg.ds_max = 1e-3;
        assert_eq!(cfl_timestep(&v, &cfg, None).unwrap(), 1e-3);
        assert_eq!(cfl_timestep(&v.scaled(0.0), &cfg, None), Err(SolverError::ZeroMaximum));
    }

    #[test]
    fn semi_implicit_growth_is_limited() {
        let v = separable(1, 50, 1e-6);
        let cfg = SolverConfig::new(1e-6, 1.0);
        let first = cfl_timestep(&v, &cfg, None).unwrap();
        assert!(first <= cfg.ds_init);
        assert!(cfl_timestep(&v, &cfg, Some(1e-5)).unwrap() <= 1.1e-5 * (1.0 + 1e-15));
    }

    #[test]
    fn constant_state_is_steady() {
        for scheme in [Scheme::Explicit, Scheme::SemiImplicit] {
            let mut cfg = SolverConfig::new(0.25, 1.0);
            cfg.scheme = scheme;
            let v = RadialField::constant(grid(2, 1.0, 20), 0.25).unwrap();
            let w = step(&v, 0.01, &cfg).unwrap();
            for x in w.values() {
                assert_relative_eq!(*x, 0.25, max_relative = 1e-14);
            }
            assert_eq!(step(&v, 0.0, &cfg).unwrap(), v);
            let trace = solve(&v, &cfg).unwrap();
            assert!(trace.mass.iter().all(|mm| (mm / trace.mass[0] - 1.0).abs() < 1e-13));
            assert!(trace.energy.iter().all(|k| *k < 1e-25));
        }
    }

    #[test]
    fn explicit_step_on_separable_profile() {
        let v = separable(1, 100, 0.0).map(|x| x + 1e-300).unwrap();
        let mut cfg = SolverConfig::new(1e-300, 1.0);
        cfg.scheme = Scheme::Explicit;
        let ds = 1e-4;
        let w = step(&v, ds, &cfg).unwrap();
        for (a, b) in w.values().iter().zip(v.values()).take(100) {
            assert_relative_eq!(*a, b * (1.0 - ds), max_relative = 1e-10);
        }
    }

    #[test]
    fn separable_center_value() {
        let v0 = separable(1, 400, 1e-8);
        let cfg = SolverConfig::new(1e-8, 1.0);
        let trace = solve(&v0, &cfg).unwrap();
        assert_relative_eq!(trace.center.last().copied().unwrap(), 0.25, max_relative = 1e-2);
        assert_eq!(trace.s_last(), 1.0);
    }

    #[test]
    fn mass_balance_and_snapshots() {
        let g = grid(1, 20.0, 400);
        let v0 = RadialField::from_fn(g, |r| (1.0 + r).powi(-4) - 21f64.powi(-4) + 1e-9).unwrap();
        let mut cfg = SolverConfig::new(1e-9, 5.0);
        cfg.snapshot_times = vec![0.0, 0.5, 2.0, 5.0];
        cfg.p_list = vec![0.5, 2.0];
        let trace = solve(&v0, &cfg).unwrap();
        assert_eq!(trace.snapshots.iter().map(|s| s.s).collect::<Vec<_>>(), vec![0.0, 0.5, 2.0, 5.0]);
        assert_eq!(trace.lp.iter().map(|l| l.p).collect::<Vec<_>>(), vec![0.5, 1.0, 2.0]);
        let l1 = trace.lp_series(1.0).unwrap();
        let worst = (0..trace.s.len()).map(|k| (l1.raw[k] + l1.dissipation[k] - l1.raw[0]).abs()).fold(0.0, f64::max);
        assert!(worst / l1.raw[0] < 5e-3, "mass balance {worst}");
        assert!(trace.mass.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
        for snap in &trace.snapshots {
            assert!(radial_monotonicity_defect(&snap.field) <= 10.0 * 0.05f64.powi(2));
        }
    }

    #[test]
    fn stops_at_target_h() {
        let v0 = separable(1, 64, 1e-8);
        let mut cfg = SolverConfig::new(1e-8, 100.0);
        cfg.stop_at_h = Some(0.1);
        let trace = solve(&v0, &cfg).unwrap();
        assert_eq!(trace.stop, StopReason::TargetReached);
        assert!(*trace.mass_integral.last().unwrap() >= 0.1);
        assert!(trace.s_last() < 100.0);
    }

    #[test]
    fn rejects_invalid_input() {
        let v0 = separable(1, 16, 1e-8);
        let mut cfg = SolverConfig::new(1e-6, 1.0);
        assert!(matches!(solve(&v0, &cfg), Err(SolverError::BoundaryBelowEpsilon { .. })));
        cfg.epsilon = 1e-8;
        cfg.snapshot_times = vec![0.5, 0.2];
        assert!(matches!(solve(&v0, &cfg), Err(SolverError::InvalidConfig(_))));
        let neg = v0.map(|x| x - 0.1).unwrap();
        cfg.snapshot_times.clear();
        assert!(matches!(solve(&neg, &cfg), Err(SolverError::NonPositiveData(_))));
    }

    #[test]
    fn oversized_explicit_step_loses_positivity() {
        let v0 = separable(1, 64, 1e-8);
        let mut cfg = SolverConfig::new(1e-8, 1.0);
        cfg.scheme = Scheme::Explicit;
        assert!(matches!(step(&v0, 10.0, &cfg), Err(SolverError::PositivityLost { .. })));
    }
}
