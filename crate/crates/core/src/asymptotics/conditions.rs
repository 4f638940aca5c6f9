//! Numerical screening of the structural conditions on a gauge `ell`.
//!
//! Each condition is sampled on a logarithmic grid. Divergence of the time-scale
//! integral is only checked through a finite-tail proxy.

use serde::Serialize;

use super::ell::{EllFunction, EllKind};

/// Constants `a` and `lambda0` in `ell(xi) <= (1 + a lambda) ell(xi^{1+lambda})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingParams {
    pub a: f64,
    pub lambda0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    /// `ell(0) = 0`, `ell > 0` and nondecreasing.
    pub zero_pos_nondec: bool,
    /// `xi ell^{(n+2)/n}(1/xi)` nondecreasing beyond some `xi0`.
    pub monotone_growth: bool,
    /// Start of the sampled monotone range, if one was found.
    pub xi0: Option<f64>,
    /// Tail proxy for divergence of `int_1^inf dxi / (xi ell^{(n+2)/n}(1/xi))`.
    pub divergent_integral: bool,
    /// `xi ell'' >= -ell'` on `(0, xi2)`.
    pub second_derivative: bool,
    /// `ell(xi) <= (1 + a lambda) ell(xi^{1+lambda})` on `(0, xi2) x (0, lambda0]`.
    pub lambda_scaling: bool,
    pub scaling: ScalingParams,
    /// `xi ell'(xi) / ell(xi) -> 0` as `xi -> 0`.
    pub zero_limit: bool,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.zero_pos_nondec
            && self.monotone_growth
            && self.divergent_integral
            && self.second_derivative
            && self.lambda_scaling
            && self.zero_limit
    }
}

/// Scaling constants known to work for the logarithmic gauges; `a = lambda0 = 1` otherwise.
pub fn default_scaling(f: &EllFunction) -> ScalingParams {
    let lambda0: f64 = 1.0;
    let a = match f.kind {
        EllKind::NegLogPow { kappa, .. } => {
            if kappa < 1.0 {
                kappa
            } else {
                ((1.0 + lambda0).powf(kappa) - 1.0) / lambda0
            }
        }
        EllKind::IterLog { kappa, m, xi2 } => {
            let w = (m / xi2).ln().ln();
            (kappa / w).max(((1.0 + lambda0 / w).powf(kappa) - 1.0) / lambda0)
        }
        _ => 1.0,
    };
    ScalingParams { a, lambda0 }
}

fn log_grid(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
}

fn nondecreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs()))
}

pub fn check_conditions(f: &EllFunction) -> ConditionReport {
    check_conditions_with(f, default_scaling(f))
}

pub fn check_conditions_with(f: &EllFunction, scaling: ScalingParams) -> ConditionReport {
    let k = f.exponent();
    let ln10 = std::f64::consts::LN_10;

    let ln_ell: Vec<f64> = log_grid(-12.0 * ln10, 12.0 * ln10, 2001).map(|x| f.ln_ell(x)).collect();
    let zero_pos_nondec = f.eval(0.0) == Ok(0.0) && ln_ell.iter().all(|v| v.is_finite()) && nondecreasing(&ln_ell);

    // ln of xi ell^k(1/xi) for xi in [1, 1e12].
    let xs: Vec<f64> = log_grid(0.0, 12.0 * ln10, 2001).collect();
    let growth: Vec<f64> = xs.iter().map(|&x| x + k * f.ln_ell(-x)).collect();
    let last_drop = growth.windows(2).rposition(|w| w[1] < w[0] - 1e-12 * (1.0 + w[0].abs()));
    let xi0 = match last_drop {
        None => Some(1.0),
        Some(i) if i + 1 < xs.len() - 1 => Some(xs[i + 1].exp()),
        Some(_) => None,
    };
    let monotone_growth = xi0.is_some_and(|x| x <= 1e6);

    // xi * integrand = ell^{-k}(1/xi) must stay bounded below on the tail [1e6, 1e12].
    let tail: Vec<f64> = log_grid(6.0 * ln10, 12.0 * ln10, 601).map(|x| (-k * f.ln_ell(-x)).exp()).collect();
    let floor = tail[0];
    let divergent_integral = floor > 0.0 && tail.iter().all(|q| *q >= floor * (1.0 - 1e-9));

    let upper = if f.cap().is_finite() { f.cap().ln() } else { 6.0 * ln10 };
    let delta = 1e-4;
    let ell_at = |x: f64| f.ln_ell(x).exp();
    let slopes: Vec<f64> =
        log_grid(upper - 60.0, upper - 1e-2, 3001).map(|x| (ell_at(x + delta) - ell_at(x - delta)) / (2.0 * delta)).collect();
    let scale = slopes.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let second_derivative = slopes.windows(2).all(|w| w[1] >= w[0] - 1e-6 * scale);

    let mut lambda_scaling = true;
    'outer: for x in log_grid(upper - 200.0, upper - 1e-9, 400) {
        for j in 1..=20 {
            let lambda = scaling.lambda0 * j as f64 / 20.0;
            if f.ln_ell(x) > (scaling.a * lambda).ln_1p() + f.ln_ell(x * (1.0 + lambda)) + 1e-12 {
                lambda_scaling = false;
                break 'outer;
            }
        }
    }

    let ratio = |x: f64| (f.ln_ell(x + 1e-3) - f.ln_ell(x - 1e-3)) / 2e-3;
    let probes: Vec<f64> = [-1e1, -1e2, -1e3, -1e4, -1e5].iter().map(|&x| ratio(x)).collect();
    let zero_limit =
        probes.iter().all(|r| *r >= 0.0) && probes.windows(2).all(|w| w[1] < w[0]) && probes[probes.len() - 1] <= 1e-2 * probes[0];

    ConditionReport { zero_pos_nondec, monotone_growth, xi0, divergent_integral, second_derivative, lambda_scaling, scaling, zero_limit }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(kind: EllKind, n: usize) -> ConditionReport {
        check_conditions(&EllFunction::new(kind, n).unwrap())
    }

    #[test]
    fn power_family() {
        let ok = report(EllKind::Power { alpha: 0.2 }, 1);
        assert!(ok.zero_pos_nondec && ok.monotone_growth && ok.divergent_integral && ok.second_derivative);
        assert!(!ok.zero_limit && !ok.lambda_scaling);
        assert!(!report(EllKind::Power { alpha: 0.4 }, 1).monotone_growth);
        let edge = report(EllKind::Power { alpha: 1.0 / 3.0 }, 1);
        assert!(edge.monotone_growth, "{edge:?}");
        assert!(report(EllKind::Power { alpha: 0.45 }, 3).monotone_growth);
    }

    #[test]
    fn log_plus() {
        let r = report(EllKind::LogPlus { alpha: 2.0 }, 1);
        assert!(r.zero_pos_nondec && r.divergent_integral);
        assert!(!r.monotone_growth);
        assert!(report(EllKind::LogPlus { alpha: 0.3 }, 1).monotone_growth);
    }

    #[test]
    fn logarithmic_gauges_pass_everything() {
        let r = report(EllKind::NegLogPow { kappa: 2.0, m: 4.0 }, 1);
        assert!(r.all_pass(), "{r:?}");
        assert_eq!(r.scaling.a, 3.0);
        let r = report(EllKind::NegLogPow { kappa: 0.5, m: 2.0 }, 2);
        assert!(r.all_pass(), "{r:?}");
        let e = std::f64::consts::E;
        let r = report(EllKind::IterLog { kappa: 1.0, m: 2.0 * e.powf(e), xi2: 2.0 }, 1);
        assert!(r.all_pass(), "{r:?}");
    }

    #[test]
    fn too_small_scaling_constant_fails() {
        let f = EllFunction::new(EllKind::NegLogPow { kappa: 2.0, m: 4.0 }, 1).unwrap();
        let r = check_conditions_with(&f, ScalingParams { a: 1.0, lambda0: 1.0 });
        assert!(!r.lambda_scaling);
    }
}
