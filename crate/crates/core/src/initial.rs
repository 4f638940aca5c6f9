//! Initial data in the algebraic, exponential and doubly exponential decay classes.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::quadrature;
use crate::radial::{sphere_area, GridError, RadialField, RadialGrid};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InitialDataError {
    #[error("parameter {name} = {value} is invalid: {reason}")]
    Parameter { name: &'static str, value: f64, reason: &'static str },
    #[error("field mass {0} is not positive")]
    NonPositiveMass(f64),
    #[error("cannot parse family {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// User-supplied radial profile.
#[derive(Clone)]
pub struct CustomProfile {
    pub name: String,
    pub profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomProfile({})", self.name)
    }
}

impl PartialEq for CustomProfile {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.profile, &other.profile)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecayFamily {
    /// `c0 (1 + r)^{-gamma}`
    Algebraic {
        c0: f64,
        gamma: f64,
    },
    /// `c0 exp(-alpha r^beta)`
    Exponential {
        c0: f64,
        alpha: f64,
        beta: f64,
    },
    /// `c0 exp(-alpha exp(r^beta))`
    DoublyExponential {
        c0: f64,
        alpha: f64,
        beta: f64,
    },
    Custom(CustomProfile),
}

fn positive(name: &'static str, value: f64) -> Result<(), InitialDataError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(InitialDataError::Parameter { name, value, reason: "must be positive and finite" })
    }
}

impl DecayFamily {
    /// Checks the admissibility constraints for an experiment in dimension `n`.
    pub fn validate(&self, n: usize) -> Result<(), InitialDataError> {
        match *self {
            DecayFamily::Algebraic { c0, gamma } => {
                positive("c0", c0)?;
                positive("gamma", gamma)?;
                if gamma <= n as f64 {
                    return Err(InitialDataError::Parameter { name: "gamma", value: gamma, reason: "must exceed the dimension" });
                }
            }
            DecayFamily::Exponential { c0, alpha, beta } => {
                positive("c0", c0)?;
                positive("alpha", alpha)?;
                positive("beta", beta)?;
                if alpha >= 1.0 {
                    return Err(InitialDataError::Parameter { name: "alpha", value: alpha, reason: "must lie in (0, 1)" });
                }
            }
            DecayFamily::DoublyExponential { c0, alpha, beta } => {
                positive("c0", c0)?;
                positive("alpha", alpha)?;
                positive("beta", beta)?;
            }
            DecayFamily::Custom(_) => {}
        }
        Ok(())
    }

    /// Profile value at radius `r`. Doubly exponential tails underflow to zero far out.
    pub fn profile(&self, r: f64) -> f64 {
        match self {
            DecayFamily::Algebraic { c0, gamma } => c0 * (1.0 + r).powf(-gamma),
            DecayFamily::Exponential { c0, alpha, beta } => c0 * (-alpha * r.powf(*beta)).exp(),
            DecayFamily::DoublyExponential { c0, alpha, beta } => c0 * (-alpha * r.powf(*beta).exp()).exp(),
            DecayFamily::Custom(c) => (c.profile)(r),
        }
    }

    /// Same family with the amplitude multiplied by `scale`.
    pub fn rescaled(&self, scale: f64) -> DecayFamily {
        let mut out = self.clone();
        match &mut out {
            DecayFamily::Algebraic { c0, .. } | DecayFamily::Exponential { c0, .. } | DecayFamily::DoublyExponential { c0, .. } => {
                *c0 *= scale
            }
            DecayFamily::Custom(c) => {
                let inner = c.profile.clone();
                c.profile = Arc::new(move |r| scale * inner(r));
            }
        }
        out
    }

    /// Replaces a named parameter (`c0`, `gamma`, `alpha`, `beta`).
    pub fn with_param(&self, name: &str, value: f64) -> Option<DecayFamily> {
        let mut out = self.clone();
        let slot = match (&mut out, name) {
            (DecayFamily::Algebraic { c0, .. }, "c0") => c0,
            (DecayFamily::Algebraic { gamma, .. }, "gamma") => gamma,
            (DecayFamily::Exponential { c0, .. } | DecayFamily::DoublyExponential { c0, .. }, "c0") => c0,
            (DecayFamily::Exponential { alpha, .. } | DecayFamily::DoublyExponential { alpha, .. }, "alpha") => alpha,
            (DecayFamily::Exponential { beta, .. } | DecayFamily::DoublyExponential { beta, .. }, "beta") => beta,
            _ => return None,
        };
        *slot = value;
        Some(out)
    }
}

impl fmt::Display for DecayFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecayFamily::Algebraic { c0, gamma } => write!(f, "algebraic:c0={c0},gamma={gamma}"),
            DecayFamily::Exponential { c0, alpha, beta } => write!(f, "exponential:c0={c0},alpha={alpha},beta={beta}"),
            DecayFamily::DoublyExponential { c0, alpha, beta } => {
                write!(f, "doubly_exponential:c0={c0},alpha={alpha},beta={beta}")
            }
            DecayFamily::Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

impl FromStr for DecayFamily {
    type Err = InitialDataError;

    /// Grammar: `family ":" key "=" number { "," key "=" number }` with family one of
    /// `algebraic` (keys c0, gamma), `exponential` or `doubly_exponential` (keys c0, alpha, beta).
    /// `c0` defaults to 1.
    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let fail = |reason: String| InitialDataError::Parse { input: input.to_string(), reason };
        let (kind, rest) = input.trim().split_once(':').ok_or_else(|| fail("expected `<family>:<key>=<value>,...`".into()))?;
        let mut c0 = 1.0;
        let (mut gamma, mut alpha, mut beta) = (None, None, None);
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item.split_once('=').ok_or_else(|| fail(format!("`{item}` is not key=value")))?;
            let value: f64 = value.trim().parse().map_err(|_| fail(format!("`{}` is not a number", value.trim())))?;
            match key.trim() {
                "c0" => c0 = value,
                "gamma" => gamma = Some(value),
                "alpha" => alpha = Some(value),
                "beta" => beta = Some(value),
                other => return Err(fail(format!("unknown key `{other}`"))),
            }
        }
        let need = |v: Option<f64>, k: &str| v.ok_or_else(|| fail(format!("missing `{k}`")));
        match kind.trim() {
            "algebraic" => {
                if alpha.is_some() || beta.is_some() {
                    return Err(fail("algebraic takes only c0 and gamma".into()));
                }
                Ok(DecayFamily::Algebraic { c0, gamma: need(gamma, "gamma")? })
            }
            "exponential" | "doubly_exponential" => {
                if gamma.is_some() {
                    return Err(fail("gamma belongs to the algebraic family".into()));
                }
                let (alpha, beta) = (need(alpha, "alpha")?, need(beta, "beta")?);
                Ok(if kind.trim() == "exponential" {
                    DecayFamily::Exponential { c0, alpha, beta }
                } else {
                    DecayFamily::DoublyExponential { c0, alpha, beta }
                })
            }
            other => Err(fail(format!("unknown family `{other}`"))),
        }
    }
}

/// Samples the profile at every grid node.
pub fn sample(family: &DecayFamily, grid: &Arc<RadialGrid>) -> Result<RadialField, InitialDataError> {
    family.validate(grid.dim())?;
    Ok(RadialField::from_fn(grid.clone(), |r| family.profile(r))?)
}

/// Rescales to unit discrete mass; returns the field and the factor applied.
pub fn normalize_unit_mass(f: &RadialField) -> Result<(RadialField, f64), InitialDataError> {
    let mass = f.integrate();
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(InitialDataError::NonPositiveMass(mass));
    }
    let scale = 1.0 / mass;
    Ok((f.scaled(scale), scale))
}

/// Whether the profile lies in `L^p(R^n)`.
///
/// Custom profiles use a tail heuristic: `r^{n+1} f(r)^p` must shrink between `r = 1e3` and `r = 1e6`.
pub fn check_integrability(family: &DecayFamily, n: usize, p: f64) -> bool {
    match family {
        DecayFamily::Algebraic { gamma, .. } => p * gamma > n as f64,
        DecayFamily::Exponential { .. } | DecayFamily::DoublyExponential { .. } => p > 0.0,
        DecayFamily::Custom(c) => {
            let tail = |r: f64| r.powi(n as i32 + 1) * (c.profile)(r).abs().powf(p);
            tail(1e6) < tail(1e3)
        }
    }
}

/// Mass of the profile outside `B_R` in `R^n`, when it can be computed.
pub fn tail_mass(family: &DecayFamily, n: usize, radius: f64) -> Option<f64> {
    let omega = sphere_area(n);
    match *family {
        DecayFamily::Algebraic { c0, gamma } => {
            if gamma <= n as f64 {
                return None;
            }
            // Expand r^{n-1} = ((1 + r) - 1)^{n-1} and integrate term by term.
            let mut sum = 0.0;
            let mut binom = 1.0;
            let k_max = n - 1;
            for k in 0..=k_max {
                let sign = if (k_max - k) % 2 == 0 { 1.0 } else { -1.0 };
                let e = k as f64 - gamma + 1.0;
                sum += sign * binom * (1.0 + radius).powf(e) / -e;
                binom = binom * (k_max - k) as f64 / (k as f64 + 1.0);
            }
            Some(omega * c0 * sum)
        }
        DecayFamily::Exponential { .. } | DecayFamily::DoublyExponential { .. } => {
            // Integrate r^{n-1} f(r) outward until the integrand is negligible.
            let f = |r: f64| r.powi(n as i32 - 1) * family.profile(r);
            let scale = f(radius);
            if scale == 0.0 {
                return Some(0.0);
            }
            let mut total = 0.0;
            let mut a = radius;
            let mut width = radius.max(1.0);
            for _ in 0..200 {
                let q = quadrature::integrate(f, a, a + width, 1e-12, 0.0).ok()?;
                total += q.value;
                if f(a + width) < 1e-18 * scale && q.value.abs() < 1e-16 * total.abs() {
                    break;
                }
                a += width;
                width *= 2.0;
            }
            Some(omega * total)
        }
        DecayFamily::Custom(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::Grading;
    use approx::assert_relative_eq;

    fn alg(gamma: f64) -> DecayFamily {
        DecayFamily::Algebraic { c0: 1.0, gamma }
    }

    #[test]
    fn profiles() {
        assert_eq!(alg(4.0).profile(0.0), 1.0);
        assert_eq!(alg(4.0).profile(1.0), 0.0625);
        let e = DecayFamily::Exponential { c0: 2.0, alpha: 0.5, beta: 1.0 };
        assert_relative_eq!(e.profile(2.0), 2.0 * (-1.0f64).exp(), max_relative = 1e-15);
        let d = DecayFamily::DoublyExponential { c0: 1.0, alpha: 0.5, beta: 2.0 };
        assert_relative_eq!(d.profile(1.0), (-0.5 * 1f64.exp()).exp(), max_relative = 1e-15);
    }

    #[test]
    fn validation() {
        assert!(alg(1.0).validate(1).is_err());
        assert!(alg(1.5).validate(1).is_ok());
        assert!(DecayFamily::Exponential { c0: 1.0, alpha: 1.0, beta: 1.0 }.validate(3).is_err());
        assert!(DecayFamily::DoublyExponential { c0: -1.0, alpha: 1.0, beta: 1.0 }.validate(3).is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!("algebraic:c0=1,gamma=4".parse::<DecayFamily>().unwrap(), alg(4.0));
        assert_eq!(
            "exponential: alpha=0.5, beta=2".parse::<DecayFamily>().unwrap(),
            DecayFamily::Exponential { c0: 1.0, alpha: 0.5, beta: 2.0 }
        );
        for bad in ["algebraic", "algebraic:gamma=x", "polynomial:gamma=2", "exponential:alpha=1", "algebraic:gamma=3,beta=1"] {
            assert!(bad.parse::<DecayFamily>().is_err(), "{bad}");
        }
        let f = DecayFamily::DoublyExponential { c0: 2.0, alpha: 0.5, beta: 2.0 };
        assert_eq!(f.to_string().parse::<DecayFamily>().unwrap(), f);
    }

    #[test]
    fn normalization() {
        let g = Arc::new(RadialGrid::new(1, 100.0, 4000, Grading::Uniform).unwrap());
        let f = sample(&alg(4.0), &g).unwrap();
        let expected = 2.0 / 3.0 * (1.0 - 101f64.powi(-3));
        assert_relative_eq!(f.integrate(), expected, max_relative = 1e-3);
        let (unit, scale) = normalize_unit_mass(&f).unwrap();
        assert_relative_eq!(unit.integrate(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(scale, 1.0 / f.integrate(), max_relative = 1e-15);
        let (_, again) = normalize_unit_mass(&unit).unwrap();
        assert_relative_eq!(again, 1.0, max_relative = 1e-12);
        let doubled = f.scaled(2.0 / f.integrate());
        assert_relative_eq!(normalize_unit_mass(&doubled).unwrap().0.integrate(), 1.0, max_relative = 1e-12);
        assert!(normalize_unit_mass(&f.scaled(0.0)).is_err());
    }

    #[test]
    fn integrability() {
        assert!(check_integrability(&alg(4.0), 1, 0.5));
        assert!(!check_integrability(&alg(1.5), 1, 0.5));
        assert!(check_integrability(&DecayFamily::Exponential { c0: 1.0, alpha: 1.0, beta: 1.0 }, 3, 0.1));
        let custom = DecayFamily::Custom(CustomProfile { name: "slow".into(), profile: Arc::new(|r| 1.0 / (1.0 + r)) });
        assert!(!check_integrability(&custom, 1, 0.5));
    }

    #[test]
    fn tail_masses() {
        // 1D: 2 * integral_R^inf (1+r)^-4 = (2/3)(1+R)^-3.
        assert_relative_eq!(tail_mass(&alg(4.0), 1, 100.0).unwrap(), 2.0 / 3.0 * 101f64.powi(-3), max_relative = 1e-12);
        // 3D: 4 pi integral_R^inf r^2 (1+r)^-6 dr, checked by quadrature on a mapped interval.
        let direct = quadrature::integrate(
            |u: f64| {
                let r = 2.0 / u;
                4.0 * std::f64::consts::PI * r * r * (1.0 + r).powi(-6) * 2.0 / (u * u)
            },
            1e-9,
            1.0,
            1e-12,
            0.0,
        )
        .unwrap();
        assert_relative_eq!(tail_mass(&alg(6.0), 3, 2.0).unwrap(), direct.value, max_relative = 1e-8);
        let e = DecayFamily::Exponential { c0: 1.0, alpha: 0.5, beta: 1.0 };
        assert_relative_eq!(tail_mass(&e, 1, 10.0).unwrap(), 4.0 * (-5.0f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn rescale_and_override() {
        assert_eq!(alg(4.0).rescaled(3.0), DecayFamily::Algebraic { c0: 3.0, gamma: 4.0 });
        assert_eq!(alg(4.0).with_param("gamma", 2.0), Some(alg(2.0)));
        assert_eq!(alg(4.0).with_param("beta", 2.0), None);
    }
}
