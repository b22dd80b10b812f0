//! Data distributions and the D-seminorm geometry.
//!
//! Functions are handled through their values on the support of the
//! distribution: a scalar function is a slice of length `len()`, a
//! `c`-output function a row-major slice of length `len()·c`.

use crate::error::{Error, Result};
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

pub const DEFAULT_NODES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistKind {
    Finite,
    UniformInterval { r: f64, nodes: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataDist {
    kind: DistKind,
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DataDist {
    /// Weighted samples; `points` is row-major with `dim` columns. Weights are
    /// normalized to sum to one.
    pub fn finite(dim: usize, points: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 || points.is_empty() {
            return Err(Error::EmptyDimension);
        }
        if points.len() % dim != 0 {
            return Err(Error::DimensionMismatch { expected: dim, got: points.len() % dim });
        }
        if !crate::linalg::all_finite(&points) {
            return Err(Error::NonFinite("sample points"));
        }
        let n = points.len() / dim;
        let mut w = weights.unwrap_or_else(|| alloc::vec![1.0; n]);
        if w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: w.len() });
        }
        if w.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidParameter("weights must be finite and non-negative"));
        }
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return Err(Error::Degenerate("total weight is zero"));
        }
        w.iter_mut().for_each(|x| *x /= total);
        Ok(DataDist { kind: DistKind::Finite, dim, points, weights: w })
    }

    pub fn uniform_interval(r: f64, nodes: usize) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter("interval half-width must be positive"));
        }
        let (x, w) = gauss_legendre_nodes(nodes)?;
        let points = x.iter().map(|t| r * t).collect();
        let weights = w.iter().map(|wi| 0.5 * wi).collect();
        Ok(DataDist { kind: DistKind::UniformInterval { r, nodes }, dim: 1, points, weights })
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }

    pub fn is_finite(&self) -> bool {
        self.kind == DistKind::Finite
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Largest Euclidean norm over the support.
    pub fn radius(&self) -> f64 {
        (0..self.len()).map(|i| crate::linalg::norm(self.point(i))).fold(0.0, f64::max)
    }

    /// Values of a scalar function on the support.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.point(i))).collect()
    }
}

/// ⟨g, h⟩_D on sampled values with `c` outputs per point (coordinate sums).
pub fn inner_values(d: &DataDist, g: &[f64], h: &[f64], c: usize) -> f64 {
    debug_assert_eq!(g.len(), d.len() * c);
    debug_assert_eq!(h.len(), d.len() * c);
    let mut s = 0.0;
    for i in 0..d.len() {
        let row: f64 = (0..c).map(|k| g[i * c + k] * h[i * c + k]).sum();
        s += d.weight(i) * row;
    }
    s
}

pub fn seminorm_values(d: &DataDist, g: &[f64], c: usize) -> Result<f64> {
    let q = inner_values(d, g, g, c);
    if q < -1e-14 {
        return Err(Error::NonFinite("negative squared seminorm"));
    }
    Ok(q.max(0.0).sqrt())
}

pub fn inner_d(g: impl Fn(&[f64]) -> f64, h: impl Fn(&[f64]) -> f64, d: &DataDist) -> Result<f64> {
    let (gv, hv) = (d.sample(g), d.sample(h));
    if !crate::linalg::all_finite(&gv) || !crate::linalg::all_finite(&hv) {
        return Err(Error::NonFinite("function values on the support"));
    }
    Ok(inner_values(d, &gv, &hv, 1))
}

pub fn seminorm_d(g: impl Fn(&[f64]) -> f64, d: &DataDist) -> Result<f64> {
    let gv = d.sample(g);
    if !crate::linalg::all_finite(&gv) {
        return Err(Error::NonFinite("function values on the support"));
    }
    seminorm_values(d, &gv, 1)
}

/// Gauss-Legendre nodes (ascending) and weights on [−1, 1].
pub fn gauss_legendre_nodes(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(2..=4096).contains(&n) {
        return Err(Error::InvalidParameter("quadrature order must lie in [2, 4096]"));
    }
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

/// P_n(z) and P_n′(z) by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}
