//! Numerical laboratory for unit-mass solutions of `u_t = u Lap u + u int |grad u|^2`.
//!
//! Solutions are built from the local equation `v_s = v Lap v` through a change of
//! time and amplitude. The crate covers radial discretization, time stepping,
//! identity checks, the time-change tables, growth-law predictions and the
//! experiment harness.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod continuation;
pub mod functionals;
pub mod harness;
pub mod initial;
pub mod interp;
pub mod io;
pub mod quadrature;
pub mod radial;
pub mod solver;
pub mod transform;

pub use asymptotics::{EllFunction, EllKind, Fit, LawKind, PredictedLaw, Scenario};
pub use continuation::{domain_continuation, epsilon_continuation};
pub use functionals::{EnergyInequality, IdentityResidual};
pub use harness::{ExperimentConfig, ExperimentReport, Status};
pub use initial::DecayFamily;
pub use radial::{Grading, RadialField, RadialGrid};
pub use solver::{Scheme, SolutionTrace, SolverConfig};
pub use transform::{TimeGrid, TransformTables};
