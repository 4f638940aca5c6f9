//! Fixtures shared by the kernel benchmarks.

use std::sync::Arc;

use unitmass_core::initial::{normalize_unit_mass, sample};
use unitmass_core::{DecayFamily, Grading, RadialField, RadialGrid, Scheme, SolverConfig};

/// Wall value of the benchmark fields.
pub const EPSILON: f64 = 1e-10;

/// Algebraic data `(1 + r)^-4` on a graded ball of radius 1000, shifted so the
/// wall value is `EPSILON` and the mass is one up to `EPSILON |B|`.
pub fn algebraic_field(intervals: usize) -> RadialField {
    let grid = Arc::new(RadialGrid::new(1, 1000.0, intervals, Grading::Geometric(1.004)).expect("grid"));
    let family = DecayFamily::Algebraic { c0: 1.0, gamma: 4.0 };
    let raw = sample(&family, &grid).expect("sample");
    let wall = *raw.values().last().expect("nonempty");
    let base = raw.map(|x| x - wall).expect("shift");
    let unit = normalize_unit_mass(&base).expect("mass").0;
    unit.map(|x| x + EPSILON).expect("shift")
}

/// Semi-implicit configuration for a solve of `field` up to `s_end`.
pub fn short_solve(s_end: f64) -> SolverConfig {
    let mut cfg = SolverConfig::new(EPSILON, s_end);
    cfg.scheme = Scheme::SemiImplicit;
    cfg
}
