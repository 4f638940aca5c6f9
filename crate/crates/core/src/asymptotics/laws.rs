//! Closed-form growth laws for the cumulated energy in the three decay scenarios.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::ell::{EllError, EllFunction, EllKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LawError {
    #[error("scenario is inadmissible: {0}")]
    Admissibility(String),
    #[error("cannot parse scenario {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

/// Decay scenario with the slack `eps` entering the lower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Algebraic { n: usize, gamma: f64, eps: f64 },
    Exponential { n: usize, beta: f64, eps: f64 },
    DoublyExponential { n: usize, beta: f64, eps: f64 },
}

pub const DEFAULT_LOWER_SLACK: f64 = 0.25;

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Algebraic { n, gamma, eps } => write!(f, "algebraic:n={n},gamma={gamma},eps={eps}"),
            Scenario::Exponential { n, beta, eps } => write!(f, "exponential:n={n},beta={beta},eps={eps}"),
            Scenario::DoublyExponential { n, beta, eps } => write!(f, "doubly_exponential:n={n},beta={beta},eps={eps}"),
        }
    }
}

impl FromStr for Scenario {
    type Err = LawError;

    /// `algebraic:n=1,gamma=4[,eps=0.25]`, `exponential:n=1,beta=2[,eps=..]`, `doubly_exponential:n=1,beta=2[,eps=..]`.
    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| LawError::Parse { input: input.into(), reason: reason.into() };
        let (kind, rest) = input.trim().split_once(':').ok_or_else(|| fail("expected `<kind>:<key>=<value>,...`"))?;
        let (mut n, mut gamma, mut beta, mut eps) = (None, None, None, DEFAULT_LOWER_SLACK);
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item.split_once('=').ok_or_else(|| fail("entries must be key=value"))?;
            let value = value.trim();
            match key.trim() {
                "n" => n = Some(value.parse::<usize>().map_err(|_| fail("n must be a positive integer"))?),
                "gamma" => gamma = Some(value.parse::<f64>().map_err(|_| fail("gamma must be a number"))?),
                "beta" => beta = Some(value.parse::<f64>().map_err(|_| fail("beta must be a number"))?),
                "eps" => eps = value.parse::<f64>().map_err(|_| fail("eps must be a number"))?,
                _ => return Err(fail("unknown key")),
            }
        }
        let n = n.ok_or_else(|| fail("missing n"))?;
        let scenario = match kind.trim() {
            "algebraic" => Scenario::Algebraic { n, gamma: gamma.ok_or_else(|| fail("missing gamma"))?, eps },
            "exponential" => Scenario::Exponential { n, beta: beta.ok_or_else(|| fail("missing beta"))?, eps },
            "doubly_exponential" => Scenario::DoublyExponential { n, beta: beta.ok_or_else(|| fail("missing beta"))?, eps },
            _ => return Err(fail("unknown scenario kind")),
        };
        Ok(scenario)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum LawKind {
    /// `E ~ slope ln t`
    LogSlope { slope: f64 },
    /// `E ~ t^exponent`
    Power { exponent: f64 },
    /// `E ~ t ln^{-power_of_log} t`
    LogCorrected { power_of_log: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictedLaw {
    #[serde(flatten)]
    pub kind: LawKind,
    /// Range of `t` where the law is meant to be compared.
    pub window: (f64, f64),
    pub provenance: &'static str,
}

impl LawKind {
    /// The law's rate parameter (slope, exponent or log power).
    pub fn rate(&self) -> f64 {
        match *self {
            LawKind::LogSlope { slope } => slope,
            LawKind::Power { exponent } => exponent,
            LawKind::LogCorrected { power_of_log } => power_of_log,
        }
    }

    /// Shape function with unit constants.
    pub fn shape(&self, t: f64) -> f64 {
        match *self {
            LawKind::LogSlope { slope } => slope * t.ln(),
            LawKind::Power { exponent } => t.powf(exponent),
            LawKind::LogCorrected { power_of_log } => t * t.ln().powf(-power_of_log),
        }
    }

    /// Shape fixed to pass through `(t0, e0)`: additive for log laws, multiplicative otherwise.
    pub fn anchored(&self, t0: f64, e0: f64, t: f64) -> f64 {
        match self {
            LawKind::LogSlope { .. } => e0 + self.shape(t) - self.shape(t0),
            _ => e0 * self.shape(t) / self.shape(t0),
        }
    }
}

/// Upper and lower laws; doubly exponential data only have a lower law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LawPair {
    pub upper: Option<PredictedLaw>,
    pub lower: PredictedLaw,
}

pub fn closed_form_laws(scenario: &Scenario) -> Result<LawPair, LawError> {
    let window = (1.0, f64::INFINITY);
    let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(LawError::Admissibility(msg.into())) };
    match *scenario {
        Scenario::Algebraic { n, gamma, eps } => {
            let n = n as f64;
            check(gamma > n, "gamma must exceed n")?;
            check(eps > 0.0, "eps must be positive")?;
            Ok(LawPair {
                upper: Some(PredictedLaw {
                    kind: LawKind::LogSlope { slope: (gamma - n) / (n + 2.0) },
                    window,
                    provenance: "algebraic-upper",
                }),
                lower: PredictedLaw {
                    kind: LawKind::LogSlope { slope: (gamma - n - eps) / (n + 2.0) },
                    window,
                    provenance: "algebraic-lower",
                },
            })
        }
        Scenario::Exponential { n, beta, eps } => {
            check(beta > 0.0 && eps > 0.0, "beta and eps must be positive")?;
            let r = (n as f64 + 2.0) / beta;
            Ok(LawPair {
                upper: Some(PredictedLaw { kind: LawKind::Power { exponent: 1.0 / (1.0 + r) }, window, provenance: "exponential-upper" }),
                lower: PredictedLaw { kind: LawKind::Power { exponent: 1.0 / (1.0 + r + eps) }, window, provenance: "exponential-lower" },
            })
        }
        Scenario::DoublyExponential { n, beta, eps } => {
            check(beta > 0.0 && eps > 0.0, "beta and eps must be positive")?;
            let power_of_log = (n as f64 + 2.0) / beta + eps;
            Ok(LawPair {
                upper: None,
                lower: PredictedLaw {
                    kind: LawKind::LogCorrected { power_of_log },
                    window: (std::f64::consts::E, f64::INFINITY),
                    provenance: "doubly-exponential-lower",
                },
            })
        }
    }
}

/// Power gauge `xi^{n/(gamma+2)}` whose prediction has log slope `(gamma - n)/(n + 2)`.
pub fn algebraic_gauge(gamma: f64, n: usize) -> Result<EllFunction, EllError> {
    EllFunction::new(EllKind::Power { alpha: n as f64 / (gamma + 2.0) }, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_forms() {
        let alg = closed_form_laws(&Scenario::Algebraic { n: 1, gamma: 4.0, eps: 1.0 }).unwrap();
        assert_eq!(alg.upper.unwrap().kind, LawKind::LogSlope { slope: 1.0 });
        assert_eq!(alg.lower.kind, LawKind::LogSlope { slope: 2.0 / 3.0 });
        let exp = closed_form_laws(&Scenario::Exponential { n: 1, beta: 3.0, eps: 0.25 }).unwrap();
        assert_eq!(exp.upper.unwrap().kind.rate(), 0.5);
        let exp = closed_form_laws(&Scenario::Exponential { n: 2, beta: 4.0, eps: 0.5 }).unwrap();
        assert_relative_eq!(exp.lower.kind.rate(), 0.4, max_relative = 1e-15);
        let dexp = closed_form_laws(&Scenario::DoublyExponential { n: 1, beta: 2.0, eps: 0.25 }).unwrap();
        assert!(dexp.upper.is_none());
        assert_eq!(dexp.lower.kind.rate(), 1.75);
        assert!(closed_form_laws(&Scenario::Algebraic { n: 2, gamma: 2.0, eps: 0.1 }).is_err());
    }

    #[test]
    fn parsing_round_trip() {
        let s: Scenario = "algebraic:n=1,gamma=4".parse().unwrap();
        assert_eq!(s, Scenario::Algebraic { n: 1, gamma: 4.0, eps: DEFAULT_LOWER_SLACK });
        assert_eq!(s.to_string().parse::<Scenario>().unwrap(), s);
        assert!("exponential:n=1".parse::<Scenario>().is_err());
        assert!("cubic:n=1,beta=2".parse::<Scenario>().is_err());
    }

    #[test]
    fn anchoring() {
        let k = LawKind::LogSlope { slope: 2.0 };
        assert_relative_eq!(k.anchored(10.0, 3.0, 100.0), 3.0 + 2.0 * 10f64.ln(), max_relative = 1e-15);
        let p = LawKind::Power { exponent: 0.5 };
        assert_relative_eq!(p.anchored(4.0, 6.0, 16.0), 12.0, max_relative = 1e-15);
    }
}
