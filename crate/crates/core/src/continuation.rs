//! Regularization diagnostics: shrinking the wall value and growing the ball.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::initial::{self, DecayFamily, InitialDataError};
use crate::radial::{Grading, GridError, RadialField, RadialGrid};
use crate::solver::{self, SolverConfig, SolverError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContinuationError {
    #[error("continuation needs at least two entries")]
    TooFew,
    #[error("continuation list is not ordered: {0}")]
    Ordering(String),
    #[error("comparison violated by {violation:e} (slack {slack:e}) between members {first} and {second}")]
    SchemeDefect { first: usize, second: usize, violation: f64, slack: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    InitialData(#[from] InitialDataError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonContinuation {
    pub epsilons: Vec<f64>,
    /// Time at which the members are compared.
    pub s_compare: f64,
    /// `max |v_k - v_{k+1}|` at `s_compare` for consecutive members.
    pub increments: Vec<f64>,
    /// Largest increase `v_{k+1} - v_k` seen (should be nonpositive up to slack).
    pub max_violation: f64,
    pub slack: f64,
    /// Increment between the last two members.
    pub regularization_error: f64,
}

fn check_order(values: &[f64], increasing: bool) -> Result<(), ContinuationError> {
    if values.len() < 2 {
        return Err(ContinuationError::TooFew);
    }
    if values.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(ContinuationError::Ordering("entries must be positive".into()));
    }
    let bad = values.windows(2).any(|w| if increasing { w[1] < w[0] } else { w[1] > w[0] });
    if bad {
        let dir = if increasing { "nondecreasing" } else { "nonincreasing" };
        return Err(ContinuationError::Ordering(format!("entries must be {dir}")));
    }
    Ok(())
}

fn final_field(trace: &solver::SolutionTrace) -> Result<RadialField, SolverError> {
    trace.snapshots.last().map(|s| s.field.clone()).ok_or_else(|| SolverError::InvalidConfig("no snapshot recorded".into()))
}

/// Reruns `v0` (shifted so its wall value equals each epsilon) for a nonincreasing list of wall values.
pub fn epsilon_continuation(v0: &RadialField, cfg: &SolverConfig, eps_list: &[f64]) -> Result<EpsilonContinuation, ContinuationError> {
    check_order(eps_list, false)?;
    let wall = *v0.values().last().unwrap();
    let fields = eps_list
        .par_iter()
        .map(|&eps| {
            let data = v0.map(|x| x - wall + eps)?;
            let mut c = cfg.clone();
            c.epsilon = eps;
            c.snapshot_times = vec![c.s_end];
            Ok(final_field(&solver::solve(&data, &c)?)?)
        })
        .collect::<Result<Vec<_>, ContinuationError>>()?;
    let dr = v0.grid().max_spacing();
    let slack = 10.0 * dr * dr;
    let mut increments = Vec::new();
    let mut max_violation = f64::NEG_INFINITY;
    for (k, pair) in fields.windows(2).enumerate() {
        let (a, b) = (pair[0].values(), pair[1].values());
        let rise = a.iter().zip(b).map(|(x, y)| y - x).fold(f64::NEG_INFINITY, f64::max);
        max_violation = max_violation.max(rise);
        if rise > slack {
            return Err(ContinuationError::SchemeDefect { first: k, second: k + 1, violation: rise, slack });
        }
        increments.push(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    }
    Ok(EpsilonContinuation {
        epsilons: eps_list.to_vec(),
        s_compare: cfg.s_end,
        regularization_error: *increments.last().unwrap(),
        increments,
        max_violation,
        slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainContinuation {
    pub radii: Vec<f64>,
    pub s_compare: f64,
    /// `integral v(., s_compare)` on each ball.
    pub mass: Vec<f64>,
    /// Consecutive differences of `mass`.
    pub mass_increments: Vec<f64>,
    /// `max |v_{R_{k+1}} - v_{R_k}|` on the smaller ball.
    pub increments: Vec<f64>,
    pub max_violation: f64,
    pub slack: f64,
    /// Mass of the profile outside each ball, where known in closed form.
    pub tail_mass: Vec<Option<f64>>,
}

/// Uniform grids with `density` intervals per unit radius.
pub fn domain_continuation(
    family: &DecayFamily,
    dim: usize,
    density: f64,
    cfg: &SolverConfig,
    r_list: &[f64],
) -> Result<DomainContinuation, ContinuationError> {
    check_order(r_list, true)?;
    family.validate(dim)?;
    let fields = r_list
        .par_iter()
        .map(|&radius| {
            let intervals = (density * radius).ceil().max(2.0) as usize;
            let grid = Arc::new(RadialGrid::new(dim, radius, intervals, Grading::Uniform)?);
            let v0 = initial::sample(family, &grid)?;
            let mut c = cfg.clone();
            c.snapshot_times = vec![c.s_end];
            Ok(final_field(&solver::solve(&v0, &c)?)?)
        })
        .collect::<Result<Vec<_>, ContinuationError>>()?;
    let dr = 1.0 / density;
    let slack = 10.0 * dr * dr;
    let mut increments = Vec::new();
    let mut max_violation = f64::NEG_INFINITY;
    for (k, pair) in fields.windows(2).enumerate() {
        let (small, large) = (&pair[0], &pair[1]);
        let mut worst_drop = f64::NEG_INFINITY;
        let mut inc = 0.0f64;
        for (&r, &v) in small.grid().radii().iter().zip(small.values()) {
            let w = large.value_at(r);
            worst_drop = worst_drop.max(v - w);
            inc = inc.max((w - v).abs());
        }
        max_violation = max_violation.max(worst_drop);
        if worst_drop > slack {
            return Err(ContinuationError::SchemeDefect { first: k, second: k + 1, violation: worst_drop, slack });
        }
        increments.push(inc);
    }
    let mass: Vec<f64> = fields.iter().map(RadialField::integrate).collect();
    Ok(DomainContinuation {
        radii: r_list.to_vec(),
        s_compare: cfg.s_end,
        mass_increments: mass.windows(2).map(|w| w[1] - w[0]).collect(),
        mass,
        increments,
        max_violation,
        slack,
        tail_mass: r_list.iter().map(|&r| initial::tail_mass(family, dim, r)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::exact_phi;

    fn separable(m: usize) -> RadialField {
        let g = Arc::new(RadialGrid::new(1, 1.0, m, Grading::Uniform).unwrap());
        exact_phi(&g)
    }

    #[test]
    fn epsilon_increments_shrink() {
        let v0 = separable(100);
        let cfg = SolverConfig::new(1e-3, 1.0);
        let rep = epsilon_continuation(&v0, &cfg, &[1e-3, 1e-4, 1e-5]).unwrap();
        assert_eq!(rep.increments.len(), 2);
        assert!(rep.max_violation <= rep.slack);
        let ratio = rep.increments[1] / rep.increments[0];
        assert!(ratio > 0.05 && ratio < 0.2, "{rep:?}");
    }

    #[test]
    fn epsilon_list_validation() {
        let v0 = separable(20);
        let cfg = SolverConfig::new(1e-3, 0.1);
        assert_eq!(epsilon_continuation(&v0, &cfg, &[1e-3]), Err(ContinuationError::TooFew));
        assert!(matches!(epsilon_continuation(&v0, &cfg, &[1e-4, 1e-3]), Err(ContinuationError::Ordering(_))));
        let same = epsilon_continuation(&v0, &cfg, &[1e-4, 1e-4]).unwrap();
        assert_eq!(same.increments, vec![0.0]);
    }

    #[test]
    fn domain_mass_grows_with_radius() {
        let family: DecayFamily = "algebraic:c0=1,gamma=4".parse().unwrap();
        let cfg = SolverConfig::new(1e-12, 10.0);
        let rep = domain_continuation(&family, 1, 4.0, &cfg, &[50.0, 100.0, 200.0]).unwrap();
        assert!(rep.mass_increments.iter().all(|d| *d > 0.0), "{rep:?}");
        assert!(rep.mass_increments[1] < rep.mass_increments[0]);
        assert!(rep.tail_mass.iter().all(Option::is_some));

        let rep = domain_continuation(&family, 1, 4.0, &cfg, &[50.0, 50.0]).unwrap();
        assert_eq!(rep.increments, vec![0.0]);
        assert!(matches!(domain_continuation(&family, 1, 4.0, &cfg, &[100.0, 50.0]), Err(ContinuationError::Ordering(_))));
    }
}
