//! Least-squares fits of measured energy curves.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("only {0} samples in the window, need at least 10")]
    InsufficientSamples(usize),
    #[error("non-positive value {0} in a power fit")]
    NonPositive(f64),
    #[error("series lengths differ")]
    Length,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    /// Slope in `ln t` (log fit) or exponent (power fit).
    pub rate: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub r2: f64,
    pub samples: usize,
    pub window: (f64, f64),
}

impl Fit {
    /// `exp(intercept)`, the power-law prefactor.
    pub fn prefactor(&self) -> f64 {
        self.intercept.exp()
    }
}

fn regress(x: &[f64], y: &[f64], window: (f64, f64)) -> Fit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let rate = sxy / sxx;
    let intercept = my - rate * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - rate * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    Fit { rate, stderr, intercept, r2, samples: x.len(), window }
}

fn windowed(t: &[f64], e: &[f64], window: (f64, f64)) -> Result<Vec<(f64, f64)>, FitError> {
    if t.len() != e.len() {
        return Err(FitError::Length);
    }
    let pts: Vec<(f64, f64)> =
        t.iter().zip(e).filter(|(ti, _)| **ti > 0.0 && **ti >= window.0 && **ti <= window.1).map(|(a, b)| (*a, *b)).collect();
    if pts.len() < 10 {
        return Err(FitError::InsufficientSamples(pts.len()));
    }
    Ok(pts)
}

/// Fits `E = rate ln t + intercept` on `window`.
pub fn fit_log_slope(t: &[f64], e: &[f64], window: (f64, f64)) -> Result<Fit, FitError> {
    let pts = windowed(t, e, window)?;
    let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().map(|(a, b)| (a.ln(), *b)).unzip();
    Ok(regress(&x, &y, window))
}

/// Fits `ln E = rate ln t + intercept` on `window`.
pub fn fit_power(t: &[f64], e: &[f64], window: (f64, f64)) -> Result<Fit, FitError> {
    let pts = windowed(t, e, window)?;
    if let Some((_, bad)) = pts.iter().find(|(_, b)| !(*b > 0.0)) {
        return Err(FitError::NonPositive(*bad));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().map(|(a, b)| (a.ln(), b.ln())).unzip();
    Ok(regress(&x, &y, window))
}
