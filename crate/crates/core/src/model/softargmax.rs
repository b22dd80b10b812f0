//! Linear multi-class scores and their softargmax composition.

use super::NetworkMap;
use crate::domain::DataDist;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use alloc::vec::Vec;
use num_traits::Float;

/// Softargmax with the maximum subtracted first.
pub fn softargmax(u: &[f64]) -> Vec<f64> {
    let mx = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut e: Vec<f64> = u.iter().map(|x| (x - mx).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter_mut().for_each(|x| *x /= s);
    e
}

/// Logits x ↦ θ·x with θ ∈ R^{c×d} stored row-major.
#[derive(Debug, Clone, Copy)]
pub struct LinearLogits {
    pub c: usize,
    pub d: usize,
}

impl NetworkMap for LinearLogits {
    fn param_dim(&self) -> usize {
        self.c * self.d
    }
    fn input_dim(&self) -> usize {
        self.d
    }
    fn output_dim(&self) -> usize {
        self.c
    }
    fn eval(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        for k in 0..self.c {
            out[k] = dot(&theta[k * self.d..(k + 1) * self.d], x);
        }
    }
    fn grad(&self, _theta: &[f64], x: &[f64], out: &mut [f64]) {
        let m = self.c * self.d;
        out.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..self.c {
            out[k * m + k * self.d..k * m + (k + 1) * self.d].copy_from_slice(x);
        }
    }
}

/// Class probabilities x ↦ E(θ·x).
#[derive(Debug, Clone, Copy)]
pub struct SoftargmaxLinear {
    pub c: usize,
    pub d: usize,
}

impl NetworkMap for SoftargmaxLinear {
    fn param_dim(&self) -> usize {
        self.c * self.d
    }
    fn input_dim(&self) -> usize {
        self.d
    }
    fn output_dim(&self) -> usize {
        self.c
    }
    fn eval(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let mut u = alloc::vec![0.0; self.c];
        LinearLogits { c: self.c, d: self.d }.eval(theta, x, &mut u);
        out.copy_from_slice(&softargmax(&u));
    }
    fn grad(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let (c, d) = (self.c, self.d);
        let m = c * d;
        let mut u = alloc::vec![0.0; c];
        LinearLogits { c, d }.eval(theta, x, &mut u);
        let p = softargmax(&u);
        // ∂E_k/∂θ_{j,l} = (δ_kj E_k − E_k E_j) x_l
        for k in 0..c {
            for j in 0..c {
                let jk = if j == k { p[k] } else { 0.0 } - p[k] * p[j];
                for l in 0..d {
                    out[k * m + j * d + l] = jk * x[l];
                }
            }
        }
    }
}

/// Smallest normalized margin of `zeta` over a finite sample set; negative
/// when some sample is on the wrong side.
pub fn separation_margin(zeta: &[f64], c: usize, d: &DataDist, labels: &[usize]) -> Result<f64> {
    if !d.is_finite() {
        return Err(Error::InvalidParameter("separation margin needs a finite distribution"));
    }
    let dim = d.dim();
    if zeta.len() != c * dim {
        return Err(Error::DimensionMismatch { expected: c * dim, got: zeta.len() });
    }
    if labels.len() != d.len() {
        return Err(Error::DimensionMismatch { expected: d.len(), got: labels.len() });
    }
    let nz = norm(zeta);
    if nz == 0.0 {
        return Err(Error::Degenerate("zero separating ray"));
    }
    let mut worst = f64::INFINITY;
    for i in 0..d.len() {
        let x = d.point(i);
        let y = labels[i];
        if y >= c {
            return Err(Error::InvalidParameter("label out of range"));
        }
        let own = dot(&zeta[y * dim..(y + 1) * dim], x);
        let other = (0..c)
            .filter(|&j| j != y)
            .map(|j| dot(&zeta[j * dim..(j + 1) * dim], x))
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.min(own - other);
    }
    Ok(worst / nz)
}
