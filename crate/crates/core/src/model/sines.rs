//! Sums of sines x ↦ Σ a_i sin(ω_i x).

use super::NetworkMap;
use crate::specfun::sinc_triple;
use num_traits::Float;

/// Parameters are `a` followed by `ω`.
#[derive(Debug, Clone, Copy)]
pub struct SumOfSines {
    pub m: usize,
}

impl NetworkMap for SumOfSines {
    fn param_dim(&self) -> usize {
        2 * self.m
    }
    fn input_dim(&self) -> usize {
        1
    }
    fn eval(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let (a, w) = theta.split_at(self.m);
        out[0] = a.iter().zip(w).map(|(ai, wi)| ai * (wi * x[0]).sin()).sum();
    }
    fn grad(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let (a, w) = theta.split_at(self.m);
        for i in 0..self.m {
            let (s, c) = (w[i] * x[0]).sin_cos();
            out[i] = s;
            out[self.m + i] = a[i] * x[0] * c;
        }
    }
}

/// Closed-form inner products under U(−R, R) of e_u = sin(u·), e′_u = x cos(u·):
/// returns (⟨e_u, e_v⟩, ⟨e′_u, e_v⟩, ⟨e′_u, e′_v⟩).
pub fn sine_gram(u: f64, v: f64, r: f64) -> (f64, f64, f64) {
    let dm = sinc_triple(r * (u - v));
    let dp = sinc_triple(r * (u + v));
    let g_ee = 0.5 * (dm.s - dp.s);
    // sinc′ = −psi
    let g_de = 0.5 * r * (-dm.psi + dp.psi);
    let g_dd = 0.5 * r * r * (dm.phi + dp.phi);
    (g_ee, g_de, g_dd)
}
