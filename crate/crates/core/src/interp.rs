//! Shape-preserving cubic Hermite interpolation and its inverse.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InterpError {
    #[error("need at least two nodes")]
    TooFewNodes,
    #[error("nodes must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("length mismatch: {0} abscissae, {1} ordinates")]
    Length(usize, usize),
    #[error("value {0} lies outside the interpolated range [{1}, {2}]")]
    OutOfRange(f64, f64, f64),
}

/// Piecewise cubic Hermite interpolant whose slopes are limited so that
/// monotone data yield a monotone curve.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    /// Fritsch-Butland slopes (harmonic mean of neighbouring secants).
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, InterpError> {
        check_nodes(&x, &y)?;
        let n = x.len();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
            return Ok(MonotoneCubic { x, y, d });
        }
        for i in 1..n - 1 {
            let (a, b) = (delta[i - 1], delta[i]);
            if a * b > 0.0 {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                d[i] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        d[0] = end_slope(x[1] - x[0], x[2] - x[1], delta[0], delta[1]);
        d[n - 1] = end_slope(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3], delta[n - 2], delta[n - 3]);
        Ok(MonotoneCubic { x, y, d })
    }

    /// Uses the supplied derivative samples, clipped where they would break monotonicity.
    pub fn with_slopes(x: Vec<f64>, y: Vec<f64>, mut d: Vec<f64>) -> Result<Self, InterpError> {
        check_nodes(&x, &y)?;
        if d.len() != x.len() {
            return Err(InterpError::Length(x.len(), d.len()));
        }
        for i in 0..x.len() - 1 {
            let delta = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
            if delta == 0.0 {
                d[i] = 0.0;
                d[i + 1] = 0.0;
                continue;
            }
            for k in [i, i + 1] {
                if d[k] * delta < 0.0 {
                    d[k] = 0.0;
                }
                if d[k].abs() > 3.0 * delta.abs() {
                    d[k] = 3.0 * delta;
                }
            }
        }
        Ok(MonotoneCubic { x, y, d })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn x_min(&self) -> f64 {
        self.x[0]
    }
    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    fn locate(&self, t: f64) -> usize {
        let j = self.x.partition_point(|&v| v <= t);
        j.clamp(1, self.x.len() - 1) - 1
    }

    fn hermite(&self, i: usize, t: f64) -> (f64, f64) {
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i] * h, self.d[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1;
        let slope =
            ((6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * d0 + (-6.0 * s2 + 6.0 * s) * y1 + (3.0 * s2 - 2.0 * s) * d1) / h;
        (value, slope)
    }

    /// Evaluates the interpolant; nodes are reproduced exactly. Clamps outside the node range.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x_max() {
            return *self.y.last().unwrap();
        }
        let i = self.locate(t);
        if t == self.x[i] {
            return self.y[i];
        }
        self.hermite(i, t).0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let t = t.clamp(self.x[0], self.x_max());
        self.hermite(self.locate(t), t).1
    }

    /// Solves `eval(x) = target` for an increasing interpolant (Newton safeguarded by bisection).
    pub fn invert(&self, target: f64) -> Result<f64, InterpError> {
        let (lo, hi) = (self.y[0], *self.y.last().unwrap());
        if !(target >= lo && target <= hi) {
            return Err(InterpError::OutOfRange(target, lo, hi));
        }
        let j = self.y.partition_point(|&v| v < target);
        if j < self.y.len() && self.y[j] == target {
            return Ok(self.x[j]);
        }
        let i = j - 1;
        let (mut a, mut b) = (self.x[i], self.x[i + 1]);
        let mut t = a + (b - a) * (target - self.y[i]) / (self.y[i + 1] - self.y[i]);
        for _ in 0..100 {
            let (v, dv) = self.hermite(i, t);
            let r = v - target;
            if r == 0.0 {
                return Ok(t);
            }
            if r < 0.0 {
                a = t;
            } else {
                b = t;
            }
            let newton = if dv > 0.0 { t - r / dv } else { f64::NAN };
            let next = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if (next - t).abs() <= 4.0 * f64::EPSILON * t.abs().max(f64::MIN_POSITIVE) || b - a <= 4.0 * f64::EPSILON * b.abs() {
                return Ok(next);
            }
            t = next;
        }
        Ok(t)
    }
}

fn check_nodes(x: &[f64], y: &[f64]) -> Result<(), InterpError> {
    if x.len() != y.len() {
        return Err(InterpError::Length(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(InterpError::TooFewNodes);
    }
    if let Some(i) = x.windows(2).position(|w| w[1] <= w[0]) {
        return Err(InterpError::NotIncreasing(i + 1));
    }
    Ok(())
}

/// One-sided three-point end slope, limited to preserve shape.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 < 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn reproduces_linear_data() {
        let x: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let f = MonotoneCubic::new(x, y).unwrap();
        for t in [0.5, 7.3, 40.0, 80.9] {
            assert_relative_eq!(f.eval(t), 3.0 * t - 1.0, max_relative = 1e-13);
            assert_relative_eq!(f.derivative(t), 3.0, max_relative = 1e-12);
            assert_relative_eq!(f.invert(3.0 * t - 1.0).unwrap(), t, max_relative = 1e-13);
        }
    }

    #[test]
    fn exact_slopes_give_cubic_accuracy() {
        let x: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|v| v - v * v / 4.0).collect();
        let d: Vec<f64> = x.iter().map(|v| 1.0 - v / 2.0).collect();
        let f = MonotoneCubic::with_slopes(x, y, d).unwrap();
        assert_relative_eq!(f.eval(0.5), 0.4375, max_relative = 1e-14);
        assert_relative_eq!(f.invert(0.4375).unwrap(), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(MonotoneCubic::new(vec![0.0], vec![1.0]), Err(InterpError::TooFewNodes));
        assert_eq!(MonotoneCubic::new(vec![0.0, 1.0, 1.0], vec![1.0; 3]), Err(InterpError::NotIncreasing(2)));
        let f = MonotoneCubic::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(f.invert(2.0), Err(InterpError::OutOfRange(..))));
    }

    proptest! {
        #[test]
        fn monotone_data_stay_monotone(steps in proptest::collection::vec((0.01f64..10.0, 0.0f64..5.0), 3..30)) {
            let mut x = vec![0.0];
            let mut y = vec![0.0];
            for (dx, dy) in &steps {
                x.push(x.last().unwrap() + dx);
                y.push(y.last().unwrap() + dy);
            }
            let f = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
            let mut prev = f64::NEG_INFINITY;
            let xm = *x.last().unwrap();
            for k in 0..=500 {
                let v = f.eval(xm * k as f64 / 500.0);
                prop_assert!(v >= prev - 1e-12 * (1.0 + v.abs()));
                prop_assert!(v >= -1e-12 && v <= y.last().unwrap() + 1e-12);
                prev = v;
            }
        }
    }
}
