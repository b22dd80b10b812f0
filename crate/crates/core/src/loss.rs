//! Functional losses with D-gradients, and desingularizers φ.

use crate::domain::{inner_values, DataDist};
use crate::error::{Error, Result};
use crate::model::{sample_jacobians, sample_outputs, softargmax, NetworkMap};
use alloc::vec::Vec;
use num_traits::Float;

/// A loss on sampled function values (`len()·out_dim` entries).
pub trait FunctionalLoss {
    fn out_dim(&self) -> usize;
    fn value(&self, d: &DataDist, f: &[f64]) -> f64;
    /// Canonical pointwise representative of ∇ℓ_f.
    fn grad(&self, d: &DataDist, f: &[f64]) -> Vec<f64>;
}

/// ‖f − f*‖²_D (gradient 2(f − f*)), or ½‖f − f*‖²_D (gradient f − f*).
#[derive(Debug, Clone)]
pub struct Quadratic {
    target: Vec<f64>,
    half: bool,
}

impl Quadratic {
    pub fn full(target: Vec<f64>) -> Self {
        Quadratic { target, half: false }
    }

    pub fn half(target: Vec<f64>) -> Self {
        Quadratic { target, half: true }
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn is_half(&self) -> bool {
        self.half
    }

    fn scale(&self) -> f64 {
        if self.half {
            0.5
        } else {
            1.0
        }
    }
}

impl FunctionalLoss for Quadratic {
    fn out_dim(&self) -> usize {
        1
    }
    fn value(&self, d: &DataDist, f: &[f64]) -> f64 {
        let r: Vec<f64> = f.iter().zip(&self.target).map(|(a, b)| a - b).collect();
        self.scale() * inner_values(d, &r, &r, 1)
    }
    fn grad(&self, _d: &DataDist, f: &[f64]) -> Vec<f64> {
        let k = 2.0 * self.scale();
        f.iter().zip(&self.target).map(|(a, b)| k * (a - b)).collect()
    }
}

/// Cross-entropy of softargmax probabilities, taking logits as input.
#[derive(Debug, Clone)]
pub struct CrossEntropy {
    c: usize,
    targets: Vec<f64>,
    dirac: bool,
}

impl CrossEntropy {
    pub fn dirac(c: usize, labels: &[usize]) -> Result<Self> {
        let mut targets = alloc::vec![0.0; labels.len() * c];
        for (i, &y) in labels.iter().enumerate() {
            if y >= c {
                return Err(Error::InvalidParameter("label out of range"));
            }
            targets[i * c + y] = 1.0;
        }
        Ok(CrossEntropy { c, targets, dirac: true })
    }

    /// Soft targets, one simplex row per sample.
    pub fn soft(c: usize, targets: Vec<f64>) -> Result<Self> {
        if c == 0 || targets.len() % c != 0 {
            return Err(Error::DimensionMismatch { expected: c, got: targets.len() });
        }
        for row in targets.chunks(c) {
            let s: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter("target is not in the simplex"));
            }
        }
        let dirac = targets.iter().all(|&p| p == 0.0 || p == 1.0);
        Ok(CrossEntropy { c, targets, dirac })
    }

    pub fn is_dirac(&self) -> bool {
        self.dirac
    }

    pub fn classes(&self) -> usize {
        self.c
    }
}

fn log_sum_exp(u: &[f64]) -> f64 {
    let mx = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    mx + u.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

impl FunctionalLoss for CrossEntropy {
    fn out_dim(&self) -> usize {
        self.c
    }
    fn value(&self, d: &DataDist, f: &[f64]) -> f64 {
        let c = self.c;
        let mut total = 0.0;
        for i in 0..d.len() {
            let u = &f[i * c..(i + 1) * c];
            let lse = log_sum_exp(u);
            let y = &self.targets[i * c..(i + 1) * c];
            let h: f64 = (0..c).filter(|&k| y[k] > 0.0).map(|k| y[k] * (lse - u[k])).sum();
            total += d.weight(i) * h;
        }
        total
    }
    fn grad(&self, d: &DataDist, f: &[f64]) -> Vec<f64> {
        let c = self.c;
        let mut g = Vec::with_capacity(f.len());
        for i in 0..d.len() {
            let p = softargmax(&f[i * c..(i + 1) * c]);
            g.extend(p.iter().zip(&self.targets[i * c..(i + 1) * c]).map(|(p, y)| p - y));
        }
        g
    }
}

/// Strictly increasing φ : (0, ∞) → R with its derivative and inverse.
pub trait Desingularizer {
    fn phi(&self, u: f64) -> f64;
    fn dphi(&self, u: f64) -> f64;
    fn phi_inv(&self, v: f64) -> f64;
}

/// φ = log, the Polyak-Łojasiewicz case.
#[derive(Debug, Clone, Copy)]
pub struct LogDesing;

impl Desingularizer for LogDesing {
    fn phi(&self, u: f64) -> f64 {
        u.ln()
    }
    fn dphi(&self, u: f64) -> f64 {
        1.0 / u
    }
    fn phi_inv(&self, v: f64) -> f64 {
        v.exp()
    }
}

/// φ(z) = log(eᶻ − 1) − 1/(eᶻ − 1), so that dφ = (1 − e⁻ᶻ)⁻².
#[derive(Debug, Clone, Copy)]
pub struct LogisticDesing;

impl Desingularizer for LogisticDesing {
    fn phi(&self, z: f64) -> f64 {
        if z > 1.0 {
            let q = -(-z).exp_m1();
            z + q.ln() - (-z).exp() / q
        } else {
            let e = z.exp_m1();
            e.ln() - 1.0 / e
        }
    }
    fn dphi(&self, z: f64) -> f64 {
        let q = (-z).exp_m1();
        1.0 / (q * q)
    }
    fn phi_inv(&self, v: f64) -> f64 {
        (1.0 / crate::specfun::lambert_w0_of_exp(-v)).ln_1p()
    }
}

pub fn logistic_desingularizer() -> LogisticDesing {
    LogisticDesing
}

/// φ(u) = −u⁻³/3, so that dφ = u⁻⁴.
#[derive(Debug, Clone, Copy)]
pub struct InverseCubeDesing;

impl Desingularizer for InverseCubeDesing {
    fn phi(&self, u: f64) -> f64 {
        -1.0 / (3.0 * u * u * u)
    }
    fn dphi(&self, u: f64) -> f64 {
        1.0 / (u * u * u * u)
    }
    fn phi_inv(&self, v: f64) -> f64 {
        (-3.0 * v).powf(-1.0 / 3.0)
    }
}

/// Loss value, parameter gradient and functional gradient at θ.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub fgrad: Vec<f64>,
}

impl Evaluation {
    pub fn grad_norm_sq(&self) -> f64 {
        crate::linalg::dot(&self.grad, &self.grad)
    }
}

/// L(θ) = ℓ(F(θ)) and ∇L(θ) = E_x[∇F_θ(x)·∇ℓ(x)].
pub fn evaluate<M, L>(model: &M, loss: &L, d: &DataDist, theta: &[f64]) -> Evaluation
where
    M: NetworkMap + ?Sized,
    L: FunctionalLoss + ?Sized,
{
    let f = sample_outputs(model, theta, d);
    let value = loss.value(d, &f);
    let fgrad = loss.grad(d, &f);
    let grad = contract(model, theta, d, &fgrad);
    Evaluation { loss: value, grad, fgrad }
}

/// J_g = E_x[∇F_θ(x)ᵀ g(x)].
pub(crate) fn contract<M: NetworkMap + ?Sized>(model: &M, theta: &[f64], d: &DataDist, g: &[f64]) -> Vec<f64> {
    let (c, m) = (model.output_dim(), model.param_dim());
    let jac = sample_jacobians(model, theta, d);
    let mut out = alloc::vec![0.0; m];
    for i in 0..d.len() {
        let w = d.weight(i);
        for k in 0..c {
            let gk = w * g[i * c + k];
            if gk != 0.0 {
                let row = &jac[(i * c + k) * m..(i * c + k + 1) * m];
                crate::linalg::axpy(gk, row, &mut out);
            }
        }
    }
    out
}

/// dφ(L(θ))·‖∇L(θ)‖².
pub fn kl_residual<M, L, P>(model: &M, loss: &L, desing: &P, theta: &[f64], d: &DataDist) -> Result<f64>
where
    M: NetworkMap + ?Sized,
    L: FunctionalLoss + ?Sized,
    P: Desingularizer + ?Sized,
{
    let e = evaluate(model, loss, d, theta);
    if !(e.loss > 0.0) {
        return Err(Error::Degenerate("kl residual needs a positive loss"));
    }
    Ok(desing.dphi(e.loss) * e.grad_norm_sq())
}
