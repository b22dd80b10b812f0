use super::NetworkMap;
use crate::linalg::dot;

/// f_θ(x) = ⟨x, θ⟩.
#[derive(Debug, Clone, Copy)]
pub struct LinearModel {
    pub d: usize,
}

impl NetworkMap for LinearModel {
    fn param_dim(&self) -> usize {
        self.d
    }
    fn input_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        out[0] = dot(x, theta);
    }
    fn grad(&self, _theta: &[f64], x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
}
