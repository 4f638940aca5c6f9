//! Gauge functions `ell` describing initial decay, and the associated time scale
//! `Lcal(t) = int_1^t dxi / (xi ell^{(n+2)/n}(1/xi))`.

use serde::Serialize;

use crate::quadrature;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EllError {
    #[error("parameter {name} = {value} is inadmissible: {reason}")]
    Parameter { name: &'static str, value: f64, reason: &'static str },
    #[error("argument {0} is outside the domain")]
    Domain(f64),
    #[error("integrand is not integrable: {0}")]
    Integration(quadrature::QuadError),
    #[error("cannot bracket the inverse for y = {0}")]
    Bracket(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum EllKind {
    /// `xi^alpha`
    Power { alpha: f64 },
    /// `ln^alpha(1 + xi)`
    LogPlus { alpha: f64 },
    /// `ln^{-kappa}(M / xi)`, frozen for `xi >= M / 2`.
    NegLogPow { kappa: f64, m: f64 },
    /// `(ln ln(M / xi))^{-kappa}`, frozen for `xi >= xi2`.
    IterLog { kappa: f64, m: f64, xi2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllFunction {
    pub kind: EllKind,
    pub dim: usize,
}

impl From<quadrature::QuadError> for EllError {
    fn from(e: quadrature::QuadError) -> Self {
        EllError::Integration(e)
    }
}

/// Largest `ln xi` at which `Lcal^{-1}` is sought.
const MAX_LOG_XI: f64 = 700.0;

impl EllFunction {
    pub fn new(kind: EllKind, dim: usize) -> Result<Self, EllError> {
        let bad = |name, value, reason| Err(EllError::Parameter { name, value, reason });
        if dim == 0 {
            return bad("dim", 0.0, "must be at least 1");
        }
        match kind {
            EllKind::Power { alpha } | EllKind::LogPlus { alpha } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return bad("alpha", alpha, "must be positive");
                }
            }
            EllKind::NegLogPow { kappa, m } => {
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return bad("kappa", kappa, "must be positive");
                }
                if !(m >= 2.0 && m.is_finite()) {
                    return bad("M", m, "must be at least 2");
                }
            }
            EllKind::IterLog { kappa, m, xi2 } => {
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return bad("kappa", kappa, "must be positive");
                }
                if !(m.is_finite() && m > std::f64::consts::E) {
                    return bad("M", m, "must exceed e");
                }
                if !(xi2 > 0.0 && (m / xi2).ln() > 1.0) {
                    return bad("xi2", xi2, "needs ln(M / xi2) > 1");
                }
            }
        }
        Ok(EllFunction { kind, dim })
    }

    /// `(n + 2) / n`.
    pub fn exponent(&self) -> f64 {
        (self.dim as f64 + 2.0) / self.dim as f64
    }

    /// Right end of the interval where the variant is given by its formula.
    pub fn cap(&self) -> f64 {
        match self.kind {
            EllKind::Power { .. } | EllKind::LogPlus { .. } => f64::INFINITY,
            EllKind::NegLogPow { m, .. } => m / 2.0,
            EllKind::IterLog { xi2, .. } => xi2,
        }
    }

    /// `ln ell(xi)` as a function of `ln xi`; stays finite far below `f64` underflow.
    pub fn ln_ell(&self, ln_xi: f64) -> f64 {
        match self.kind {
            EllKind::Power { alpha } => alpha * ln_xi,
            EllKind::LogPlus { alpha } => {
                let l1p = ln_xi.exp().ln_1p();
                alpha * if l1p > 0.0 { l1p.ln() } else { ln_xi }
            }
            EllKind::NegLogPow { kappa, m } => {
                let lx = ln_xi.min((m / 2.0).ln());
                -kappa * (m.ln() - lx).ln()
            }
            EllKind::IterLog { kappa, m, xi2 } => {
                let lx = ln_xi.min(xi2.ln());
                -kappa * (m.ln() - lx).ln().ln()
            }
        }
    }

    pub fn eval(&self, xi: f64) -> Result<f64, EllError> {
        if !(xi >= 0.0) {
            return Err(EllError::Domain(xi));
        }
        Ok(if xi == 0.0 { 0.0 } else { self.ln_ell(xi.ln()).exp() })
    }

    /// Integrand of `Lcal` in `y = ln xi`: `ell^{-(n+2)/n}(e^{-y})`.
    fn integrand(&self, y: f64) -> f64 {
        (-self.exponent() * self.ln_ell(-y)).exp()
    }

    /// `ln Lcal'(xi) = -ln xi - k ln ell(1/xi)`.
    pub fn ln_lcal_prime(&self, ln_xi: f64) -> f64 {
        -ln_xi - self.exponent() * self.ln_ell(-ln_xi)
    }

    fn lcal_of_log(&self, ln_t: f64) -> Result<f64, EllError> {
        Ok(quadrature::integrate(|y| self.integrand(y), 0.0, ln_t, 1e-12, 0.0)?.value)
    }

    /// `Lcal(t)` by adaptive quadrature in `ln xi`.
    pub fn compute_l(&self, t: f64) -> Result<f64, EllError> {
        if !(t >= 1.0 && t.is_finite()) {
            return Err(EllError::Domain(t));
        }
        self.lcal_of_log(t.ln())
    }

    /// `ln Lcal^{-1}(y)`, found by bracketing and safeguarded Newton in `ln xi`.
    pub fn invert_l_log(&self, y: f64) -> Result<f64, EllError> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(EllError::Domain(y));
        }
        let mut lo = (0.0, 0.0);
        let mut hi_x = 1.0;
        let mut hi_f = self.lcal_of_log(hi_x)?;
        while hi_f < y {
            lo = (hi_x, hi_f);
            hi_x *= 2.0;
            if hi_x > MAX_LOG_XI {
                return Err(EllError::Bracket(y));
            }
            hi_f = self.lcal_of_log(hi_x)?;
        }
        // Newton on F(x) = Lcal(e^x) - y, F'(x) = integrand(x), integrating only the increment.
        let (mut a, mut fa) = lo;
        let mut b = hi_x;
        let mut x = a + (b - a) * (y - fa) / (hi_f - fa);
        for _ in 0..200 {
            let fx = fa + quadrature::integrate(|z| self.integrand(z), a, x, 1e-13, 0.0)?.value;
            let r = fx - y;
            if r.abs() <= 1e-14 * y {
                return Ok(x);
            }
            if r < 0.0 {
                a = x;
                fa = fx;
            } else {
                b = x;
            }
            let newton = x - r / self.integrand(x);
            let next = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if (next - x).abs() <= 1e-15 * x.abs().max(1.0) {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }

    pub fn invert_l(&self, y: f64) -> Result<f64, EllError> {
        Ok(self.invert_l_log(y)?.exp())
    }

    /// `ln((Lcal^{-1})'(c1 t)) = -ln Lcal'(xi)` at `xi = Lcal^{-1}(c1 t)`.
    pub fn predicted_e(&self, c1: f64, t: f64) -> Result<f64, EllError> {
        if !(c1 > 0.0) {
            return Err(EllError::Domain(c1));
        }
        let ln_xi = self.invert_l_log(c1 * t)?;
        Ok(-self.ln_lcal_prime(ln_xi))
    }

    /// Closed form of `Lcal(t)` where one exists.
    pub fn closed_form_l(&self, t: f64) -> Option<f64> {
        let k = self.exponent();
        match self.kind {
            EllKind::Power { alpha } => {
                let m = alpha * k;
                Some(((m * t.ln()).exp_m1()) / m)
            }
            EllKind::NegLogPow { kappa, m } if t >= 2.0 / m => {
                let gamma = 1.0 + kappa * k;
                Some(((m * t).ln().powf(gamma) - m.ln().powf(gamma)) / gamma)
            }
            _ => None,
        }
    }

    /// Closed form of `Lcal^{-1}(y)` where one exists.
    pub fn closed_form_inverse(&self, y: f64) -> Option<f64> {
        let k = self.exponent();
        match self.kind {
            EllKind::Power { alpha } => {
                let m = alpha * k;
                Some((1.0 + m * y).powf(1.0 / m))
            }
            EllKind::NegLogPow { kappa, m } => {
                let gamma = 1.0 + kappa * k;
                Some((gamma * y + m.ln().powf(gamma)).powf(1.0 / gamma).exp() / m)
            }
            _ => None,
        }
    }
}
