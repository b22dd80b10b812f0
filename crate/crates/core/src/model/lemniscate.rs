//! Two parameterizations of Bernoulli's lemniscate (a²+b²)² = a² − b², seen
//! as linear functions (x, y) ↦ a·x + b·y.

use super::NetworkMap;
use crate::error::{Error, Result};
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Periodic and surjective: θ ↦ (cos θ, sin θ cos θ)/(1 + sin²θ).
    Sphere,
    /// Rational, punctured at (−1, 0).
    Line,
}

pub fn lemniscate_eval(v: Variant, t: f64) -> (f64, f64) {
    match v {
        Variant::Sphere => {
            let (s, c) = t.sin_cos();
            let q = 1.0 + s * s;
            (c / q, s * c / q)
        }
        Variant::Line => {
            let t2 = t * t;
            let q = 1.0 + 6.0 * t2 + t2 * t2;
            ((1.0 - t2 * t2) / q, 2.0 * t * (1.0 - t2) / q)
        }
    }
}

pub fn lemniscate_grad(v: Variant, t: f64) -> (f64, f64) {
    match v {
        Variant::Sphere => {
            let (s, c) = t.sin_cos();
            let (s2, c2) = (s * s, c * c);
            let q2 = (1.0 + s2) * (1.0 + s2);
            (-s * ((1.0 + s2) + 2.0 * c2) / q2, (-s2 * s2 - s2 + (1.0 - s2) * c2) / q2)
        }
        Variant::Line => {
            let t2 = t * t;
            let t4 = t2 * t2;
            let q = t4 + 6.0 * t2 + 1.0;
            let q2 = q * q;
            (
                -4.0 * t * (3.0 * t4 + 2.0 * t2 + 3.0) / q2,
                2.0 * (t4 * t2 - 9.0 * t4 - 9.0 * t2 + 1.0) / q2,
            )
        }
    }
}

/// Cosine between the tangent ∇F(θ) and −∇ℓ.
pub fn mu_s(v: Variant, t: f64, loss_grad: (f64, f64)) -> Result<f64> {
    let (da, db) = lemniscate_grad(v, t);
    let nt = (da * da + db * db).sqrt();
    let ng = (loss_grad.0 * loss_grad.0 + loss_grad.1 * loss_grad.1).sqrt();
    if nt == 0.0 || ng == 0.0 {
        return Err(Error::Degenerate("zero tangent or zero loss gradient"));
    }
    Ok(-(da * loss_grad.0 + db * loss_grad.1) / (nt * ng))
}

/// Squared speed ‖∇F(θ)‖².
pub fn lambda_sv(v: Variant, t: f64) -> f64 {
    let (da, db) = lemniscate_grad(v, t);
    da * da + db * db
}

/// One-parameter map to linear functions on R²; inputs are points (x, y).
#[derive(Debug, Clone, Copy)]
pub struct Lemniscate(pub Variant);

impl NetworkMap for Lemniscate {
    fn param_dim(&self) -> usize {
        1
    }
    fn input_dim(&self) -> usize {
        2
    }
    fn eval(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let (a, b) = lemniscate_eval(self.0, theta[0]);
        out[0] = a * x[0] + b * x[1];
    }
    fn grad(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let (da, db) = lemniscate_grad(self.0, theta[0]);
        out[0] = da * x[0] + db * x[1];
    }
}
