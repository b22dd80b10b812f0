//! Network maps θ ↦ f_θ with closed-form parameter gradients.

mod lemniscate;
mod linear;
mod sines;
mod softargmax;
mod two_layer;

pub use lemniscate::{lambda_sv, lemniscate_eval, lemniscate_grad, mu_s, Lemniscate, Variant};
pub use linear::LinearModel;
pub use sines::{sine_gram, SumOfSines};
pub use softargmax::{separation_margin, softargmax, LinearLogits, SoftargmaxLinear};
pub use two_layer::{nearest_neuron, two_layer_nu0, TwoLayerNet};

use crate::domain::DataDist;
use alloc::vec;
use alloc::vec::Vec;

/// A differentiable map from parameters to functions on an input space.
///
/// `grad` writes the `output_dim × param_dim` Jacobian of `θ ↦ f_θ(x)`,
/// row-major: row `k` is ∇_θ of output coordinate `k`.
pub trait NetworkMap {
    fn param_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize {
        1
    }
    fn eval(&self, theta: &[f64], x: &[f64], out: &mut [f64]);
    fn grad(&self, theta: &[f64], x: &[f64], out: &mut [f64]);
}

/// Sampled `f_θ` on the support, `len()·output_dim` values.
pub fn sample_outputs<M: NetworkMap + ?Sized>(model: &M, theta: &[f64], d: &DataDist) -> Vec<f64> {
    let c = model.output_dim();
    let mut out = vec![0.0; d.len() * c];
    for i in 0..d.len() {
        model.eval(theta, d.point(i), &mut out[i * c..(i + 1) * c]);
    }
    out
}

/// Sampled Jacobians, one `output_dim × param_dim` block per support point.
pub fn sample_jacobians<M: NetworkMap + ?Sized>(model: &M, theta: &[f64], d: &DataDist) -> Vec<f64> {
    let block = model.output_dim() * model.param_dim();
    let mut out = vec![0.0; d.len() * block];
    for i in 0..d.len() {
        model.grad(theta, d.point(i), &mut out[i * block..(i + 1) * block]);
    }
    out
}

/// dF_θ·ν sampled on the support.
pub fn directional<M: NetworkMap + ?Sized>(
    model: &M,
    theta: &[f64],
    nu: &[f64],
    d: &DataDist,
) -> Vec<f64> {
    let (c, m) = (model.output_dim(), model.param_dim());
    let mut jac = vec![0.0; c * m];
    let mut out = vec![0.0; d.len() * c];
    for i in 0..d.len() {
        model.grad(theta, d.point(i), &mut jac);
        for k in 0..c {
            out[i * c + k] = crate::linalg::dot(&jac[k * m..(k + 1) * m], nu);
        }
    }
    out
}
