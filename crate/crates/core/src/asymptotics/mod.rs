//! Growth-law machinery: gauge functions, their time scales, closed-form laws and rate fits.

pub mod conditions;
pub mod ell;
pub mod fit;
pub mod laws;

pub use conditions::{check_conditions, check_conditions_with, ConditionReport, ScalingParams};
pub use ell::{EllError, EllFunction, EllKind};
pub use fit::{fit_log_slope, fit_power, Fit, FitError};
pub use laws::{algebraic_gauge, closed_form_laws, LawKind, LawPair, PredictedLaw, Scenario};
