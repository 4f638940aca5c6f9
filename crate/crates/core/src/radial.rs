//! Radially symmetric grids and fields on a truncated ball `B_R` in dimension `n`.
//!
//! The spatial operator is written in conservative form. Each node `i` owns the
//! exact integral `V_i` of its hat function against `r^{n-1}`, and each face
//! `i+1/2` carries the coefficient `a = 2n C_i / (r_i + r_{i+1})` with
//! `C_i = V_0 + ... + V_i`. This makes the Laplacian exact on quadratics on any
//! grid, reduces to `2n (f_1 - f_0) / r_1^2` at the origin, and turns the
//! discrete Green identity into an exact summation-by-parts relation.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::Arc;

use crate::io::fmt_g17;

/// Node placement along `[0, R]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    Uniform,
    /// Interval lengths grow by this ratio from the origin outward.
    Geometric(f64),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("dimension must be at least 1")]
    Dimension,
    #[error("radius must be positive and finite, got {0}")]
    Radius(f64),
    #[error("need at least 8 intervals, got {0}")]
    TooFewIntervals(usize),
    #[error("geometric ratio must be finite and exceed 1, got {0}")]
    Ratio(f64),
    #[error("field has {got} values but the grid has {expected} nodes")]
    Length { expected: usize, got: usize },
    #[error("field value at node {0} is not finite")]
    NonFinite(usize),
    #[error("exponent must be positive and finite, got {0}")]
    Exponent(f64),
    #[error("value {value} at node {index} is negative and the exponent {p} is fractional")]
    NegativeBase { index: usize, value: f64, p: f64 },
}

/// Surface area of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    // omega_n = 2 pi^{n/2} / Gamma(n/2), built by the recursion omega_{n+2} = 2 pi omega_n / n.
    let (mut w, mut k) = if n % 2 == 1 { (2.0, 1) } else { (2.0 * PI, 2) };
    while k < n {
        w *= 2.0 * PI / k as f64;
        k += 2;
    }
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: usize,
    radii: Vec<f64>,
    /// Hat-function moments of `r^{n-1}`, without the sphere factor.
    volumes: Vec<f64>,
    quad_weights: Vec<f64>,
    /// `a_{i+1/2} / (r_{i+1} - r_i)` for each interval.
    conductance: Vec<f64>,
    sphere_area: f64,
}

impl RadialGrid {
    /// Builds a grid with `intervals` cells, i.e. `intervals + 1` nodes `0 = r_0 < ... < r_M = R`.
    pub fn new(dim: usize, radius: f64, intervals: usize, grading: Grading) -> Result<Self, GridError> {
        if dim == 0 {
            return Err(GridError::Dimension);
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GridError::Radius(radius));
        }
        if intervals < 8 {
            return Err(GridError::TooFewIntervals(intervals));
        }
        let m = intervals;
        let mut radii = Vec::with_capacity(m + 1);
        match grading {
            Grading::Uniform => {
                radii.extend((0..=m).map(|i| radius * i as f64 / m as f64));
            }
            Grading::Geometric(q) => {
                if !(q.is_finite() && q > 1.0) {
                    return Err(GridError::Ratio(q));
                }
                let h0 = radius * (q - 1.0) / (q.powi(m as i32) - 1.0);
                let mut r = 0.0;
                let mut h = h0;
                radii.push(0.0);
                for _ in 0..m {
                    r += h;
                    h *= q;
                    radii.push(r);
                }
            }
        }
        radii[m] = radius;
        Ok(Self::from_radii(dim, radii))
    }

    fn from_radii(dim: usize, radii: Vec<f64>) -> Self {
        let m = radii.len() - 1;
        let mut volumes = vec![0.0; m + 1];
        for i in 0..m {
            let (left, right) = hat_moments(dim, radii[i], radii[i + 1] - radii[i]);
            volumes[i] += left;
            volumes[i + 1] += right;
        }
        let mut conductance = Vec::with_capacity(m);
        let mut cumulative = 0.0;
        for i in 0..m {
            cumulative += volumes[i];
            let face = 2.0 * dim as f64 * cumulative / (radii[i] + radii[i + 1]);
            conductance.push(face / (radii[i + 1] - radii[i]));
        }
        let sphere_area = sphere_area(dim);
        let quad_weights = volumes.iter().map(|v| sphere_area * v).collect();
        RadialGrid { dim, radii, volumes, quad_weights, conductance, sphere_area }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn radius(&self) -> f64 {
        *self.radii.last().unwrap()
    }
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
    pub fn len(&self) -> usize {
        self.radii.len()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn intervals(&self) -> usize {
        self.radii.len() - 1
    }
    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }
    pub fn sphere_area(&self) -> f64 {
        self.sphere_area
    }
    /// Measure of the ball, `omega_n R^n / n`.
    pub fn ball_volume(&self) -> f64 {
        self.sphere_area * self.radius().powi(self.dim as i32) / self.dim as f64
    }
    pub fn min_spacing(&self) -> f64 {
        self.radii.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
    pub fn max_spacing(&self) -> f64 {
        self.radii.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
    pub(crate) fn volumes(&self) -> &[f64] {
        &self.volumes
    }
    pub(crate) fn conductance(&self) -> &[f64] {
        &self.conductance
    }

    /// Applies the discrete Laplacian to raw node values.
    pub(crate) fn laplacian_into(&self, f: &[f64], out: &mut [f64]) {
        let m = self.intervals();
        let c = &self.conductance;
        let mut flux_in = 0.0;
        for i in 0..m {
            let flux_out = c[i] * (f[i + 1] - f[i]);
            out[i] = (flux_out - flux_in) / self.volumes[i];
            flux_in = flux_out;
        }
        // Linear extrapolation in r; the wall value is replaced by boundary data downstream.
        let (r1, r2, r3) = (self.radii[m - 2], self.radii[m - 1], self.radii[m]);
        out[m] = out[m - 1] + (out[m - 1] - out[m - 2]) * (r3 - r2) / (r2 - r1);
    }

    /// `omega_n * sum_faces a (df)(dg) / dr`, the bilinear form behind the Dirichlet energy.
    pub(crate) fn energy_form(&self, f: &[f64], g: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, c) in self.conductance.iter().enumerate() {
            acc += c * (f[i + 1] - f[i]) * (g[i + 1] - g[i]);
        }
        self.sphere_area * acc
    }

    pub(crate) fn integrate_slice(&self, f: &[f64]) -> f64 {
        self.quad_weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

/// Integrals of the left and right hat functions of the cell `[a, a + h]` against `r^{n-1}`.
fn hat_moments(dim: usize, a: f64, h: f64) -> (f64, f64) {
    // Substituting r = a + h t and expanding (a + h t)^{n-1} keeps every term positive.
    let k_max = dim - 1;
    let mut left = 0.0;
    let mut right = 0.0;
    let mut binom = 1.0;
    for k in 0..=k_max {
        let term = binom * a.powi((k_max - k) as i32) * h.powi(k as i32);
        let kf = k as f64;
        left += term / ((kf + 1.0) * (kf + 2.0));
        right += term / (kf + 2.0);
        binom = binom * (k_max - k) as f64 / (kf + 1.0);
    }
    (left * h, right * h)
}

/// Node samples of a radial function on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

/// Result of an `L^p` evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpValue {
    /// `integral f^p`.
    pub raw: f64,
    /// `(integral f^p)^{1/p}`.
    pub norm: f64,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Length { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(RadialField { grid, values })
    }

    /// Samples `f(r)` at every node.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        let values = grid.radii().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<RadialGrid>, c: f64) -> Result<Self, GridError> {
        let n = grid.len();
        Self::new(grid, vec![c; n])
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<RadialGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        RadialField { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        RadialField { grid: self.grid.clone(), values: self.values.iter().map(|v| c * v).collect() }
    }

    /// `sum_i w_i f_i`, the truncated integral over `B_R`.
    pub fn integrate(&self) -> f64 {
        self.grid.integrate_slice(&self.values)
    }

    pub fn laplacian(&self) -> RadialField {
        let mut out = vec![0.0; self.values.len()];
        self.grid.laplacian_into(&self.values, &mut out);
        RadialField { grid: self.grid.clone(), values: out }
    }

    /// Discrete `integral |grad f|^2`.
    pub fn dirichlet_energy(&self) -> f64 {
        self.grid.energy_form(&self.values, &self.values)
    }

    pub fn lp(&self, p: f64) -> Result<LpValue, GridError> {
        if !(p.is_finite() && p > 0.0) {
            return Err(GridError::Exponent(p));
        }
        let integer = p.fract() == 0.0 && p <= i32::MAX as f64;
        let mut raw = 0.0;
        for (i, (&w, &v)) in self.grid.quad_weights().iter().zip(&self.values).enumerate() {
            let term = if integer {
                v.powi(p as i32)
            } else if v < 0.0 {
                return Err(GridError::NegativeBase { index: i, value: v, p });
            } else {
                v.powf(p)
            };
            raw += w * term;
        }
        let norm = if raw >= 0.0 { raw.powf(1.0 / p) } else { f64::NAN };
        Ok(LpValue { raw, norm })
    }

    /// Linear interpolation in `r`; clamps outside `[0, R]`.
    pub fn value_at(&self, r: f64) -> f64 {
        let radii = self.grid.radii();
        if r <= 0.0 {
            return self.values[0];
        }
        if r >= self.grid.radius() {
            return *self.values.last().unwrap();
        }
        let j = radii.partition_point(|&x| x <= r).min(radii.len() - 1);
        let (r0, r1) = (radii[j - 1], radii[j]);
        let w = (r - r0) / (r1 - r0);
        self.values[j - 1] * (1.0 - w) + self.values[j] * w
    }

    /// Writes `r,value` rows at full precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "r,value")?;
        for (r, v) in self.grid.radii().iter().zip(&self.values) {
            writeln!(out, "{},{}", fmt_g17(*r), fmt_g17(*v))?;
        }
        Ok(())
    }
}

/// `(R^2 - r^2) / (2n)`, which satisfies `-Laplacian = 1` and vanishes on the wall.
pub fn exact_phi(grid: &Arc<RadialGrid>) -> RadialField {
    let r2 = grid.radius() * grid.radius();
    let n2 = 2.0 * grid.dim() as f64;
    let values = grid.radii().iter().map(|r| (r2 - r * r) / n2).collect();
    RadialField::from_parts_unchecked(grid.clone(), values)
}

/// Closed-form `integral phi_R = omega_n R^{n+2} / (n^2 (n+2))`.
pub fn phi_l1_norm(dim: usize, radius: f64) -> f64 {
    let n = dim as f64;
    sphere_area(dim) * radius.powi(dim as i32 + 2) / (n * n * (n + 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(n: usize, r: f64, m: usize, g: Grading) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(n, r, m, g).unwrap())
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(1), 2.0);
        assert_relative_eq!(sphere_area(2), 2.0 * PI);
        assert_relative_eq!(sphere_area(3), 4.0 * PI);
        assert_relative_eq!(sphere_area(4), 2.0 * PI * PI, max_relative = 1e-15);
    }

    #[test]
    fn ball_volumes() {
        let g = grid(1, 1.0, 100, Grading::Uniform);
        let one = RadialField::constant(g, 1.0).unwrap();
        assert_relative_eq!(one.integrate(), 2.0, max_relative = 1e-12);

        let g = grid(3, 2.0, 64, Grading::Uniform);
        let one = RadialField::constant(g, 1.0).unwrap();
        assert_relative_eq!(one.integrate(), 4.0 * PI / 3.0 * 8.0, max_relative = 1e-12);

        let g = grid(2, 1.0, 50, Grading::Geometric(1.05));
        assert_eq!(*g.radii().last().unwrap(), 1.0);
        let one = RadialField::constant(g, 1.0).unwrap();
        assert_relative_eq!(one.integrate(), PI, max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert_eq!(RadialGrid::new(1, 0.0, 10, Grading::Uniform), Err(GridError::Radius(0.0)));
        assert_eq!(RadialGrid::new(1, 1.0, 7, Grading::Uniform), Err(GridError::TooFewIntervals(7)));
        assert_eq!(RadialGrid::new(0, 1.0, 10, Grading::Uniform), Err(GridError::Dimension));
        assert!(RadialGrid::new(1, 1.0, 10, Grading::Geometric(1.0)).is_err());
    }

    #[test]
    fn phi_integrals() {
        let g = grid(1, 1.0, 200, Grading::Uniform);
        let phi = exact_phi(&g);
        assert_eq!(phi.values()[0], 0.5);
        assert_eq!(*phi.values().last().unwrap(), 0.0);
        assert_relative_eq!(phi.integrate(), 2.0 / 3.0, max_relative = 1e-4);

        let g = grid(3, 1.0, 400, Grading::Uniform);
        assert_relative_eq!(exact_phi(&g).integrate(), 4.0 * PI / 45.0, max_relative = 1e-4);
        assert_relative_eq!(phi_l1_norm(3, 1.0), 4.0 * PI / 45.0, max_relative = 1e-15);

        let g = grid(2, 2.0, 16, Grading::Uniform);
        assert_eq!(exact_phi(&g).values()[0], 1.0);
    }

    #[test]
    fn laplacian_is_exact_on_quadratics() {
        for n in 1..=4 {
            for grading in [Grading::Uniform, Grading::Geometric(1.07)] {
                let g = grid(n, 3.0, 40, grading);
                let lap = RadialField::from_fn(g.clone(), |r| r * r).unwrap().laplacian();
                for v in lap.values() {
                    assert_relative_eq!(*v, 2.0 * n as f64, max_relative = 1e-10);
                }
                let lap = exact_phi(&g).laplacian();
                for v in lap.values() {
                    assert_relative_eq!(*v, -1.0, max_relative = 1e-10);
                }
                let lap = RadialField::constant(g, 4.2).unwrap().laplacian();
                assert!(lap.values().iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn origin_stencil() {
        let g = grid(3, 1.0, 10, Grading::Uniform);
        let f = RadialField::from_fn(g.clone(), |r| (3.0 * r).cos()).unwrap();
        let r1 = g.radii()[1];
        let expected = 6.0 * (f.values()[1] - f.values()[0]) / (r1 * r1);
        assert_relative_eq!(f.laplacian().values()[0], expected, max_relative = 1e-12);
    }

    #[test]
    fn laplacian_converges_on_smooth_fields() {
        // Laplacian of exp(-r^2) in 2D is (4 r^2 - 4) exp(-r^2).
        let err = |m| {
            let g = grid(2, 3.0, m, Grading::Uniform);
            let f = RadialField::from_fn(g.clone(), |r| (-r * r).exp()).unwrap();
            let lap = f.laplacian();
            let mut e: f64 = 0.0;
            for (i, r) in g.radii().iter().enumerate().take(m - 1) {
                e = e.max((lap.values()[i] - (4.0 * r * r - 4.0) * (-r * r).exp()).abs());
            }
            e
        };
        let order = (err(100) / err(200)).log2();
        assert!(order > 1.8, "order {order}");
    }

    #[test]
    fn energies() {
        let g = grid(1, 1.0, 50, Grading::Uniform);
        assert_eq!(RadialField::constant(g.clone(), 3.0).unwrap().dirichlet_energy(), 0.0);
        let lin = RadialField::from_fn(g.clone(), |r| r).unwrap();
        assert_relative_eq!(lin.dirichlet_energy(), 2.0, max_relative = 1e-12);
        let fine = grid(1, 1.0, 2000, Grading::Uniform);
        assert_relative_eq!(exact_phi(&fine).dirichlet_energy(), 2.0 / 3.0, max_relative = 1e-5);
        let fine3 = grid(3, 1.0, 2000, Grading::Uniform);
        assert_relative_eq!(exact_phi(&fine3).dirichlet_energy(), phi_l1_norm(3, 1.0), max_relative = 1e-5);
    }

    #[test]
    fn lp_values() {
        let g = grid(1, 1.0, 64, Grading::Uniform);
        let one = RadialField::constant(g.clone(), 1.0).unwrap();
        assert_relative_eq!(one.lp(2.0).unwrap().raw, 2.0, max_relative = 1e-12);
        let phi = exact_phi(&g);
        assert_eq!(phi.lp(1.0).unwrap().raw, phi.integrate());

        let g = grid(1, 10.0, 4000, Grading::Uniform);
        let f = RadialField::from_fn(g, |r| (-r).exp()).unwrap();
        let lp = f.lp(0.5).unwrap();
        assert_relative_eq!(lp.raw, 4.0 * (1.0 - (-5.0f64).exp()), max_relative = 1e-5);
        assert_relative_eq!(lp.norm, lp.raw * lp.raw, max_relative = 1e-12);

        let neg = RadialField::constant(g_small(), -1.0).unwrap();
        assert!(matches!(neg.lp(0.5), Err(GridError::NegativeBase { .. })));
        assert_relative_eq!(neg.lp(3.0).unwrap().raw, -2.0, max_relative = 1e-12);
        assert!(neg.lp(0.0).is_err());
    }

    fn g_small() -> Arc<RadialGrid> {
        grid(1, 1.0, 8, Grading::Uniform)
    }

    #[test]
    fn green_identity_is_exact() {
        // sum_i w_i f_i (Lg)_i over interior nodes equals minus the energy form when f(R) = 0.
        let g = grid(3, 2.0, 60, Grading::Geometric(1.03));
        let f = RadialField::from_fn(g.clone(), |r| (4.0 - r * r) * (1.0 + r)).unwrap();
        let h = RadialField::from_fn(g.clone(), |r| (-r).exp() + r.sin()).unwrap();
        let lap = h.laplacian();
        let lhs: f64 = (0..g.intervals()).map(|i| g.quad_weights()[i] * f.values()[i] * lap.values()[i]).sum();
        let rhs = -g.energy_form(f.values(), h.values());
        assert_relative_eq!(lhs, rhs, max_relative = 1e-11);
    }

    #[test]
    fn interpolation_and_csv() {
        let g = grid(1, 1.0, 10, Grading::Uniform);
        let f = RadialField::from_fn(g, |r| 2.0 * r + 1.0).unwrap();
        assert_relative_eq!(f.value_at(0.55), 2.1, max_relative = 1e-14);
        assert_eq!(f.value_at(-1.0), 1.0);
        assert_eq!(f.value_at(5.0), 3.0);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("r,value\n0,1\n0.10000000000000001,1.2"));
        assert_eq!(text.lines().count(), 12);
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = g_small();
        assert_eq!(RadialField::new(g.clone(), vec![0.0; 3]).unwrap_err(), GridError::Length { expected: 9, got: 3 });
        let mut v = vec![0.0; 9];
        v[4] = f64::NAN;
        assert_eq!(RadialField::new(g, v).unwrap_err(), GridError::NonFinite(4));
    }
}
