//! Two-layer tanh networks x ↦ Σ a_i tanh(w_i·x).

use super::NetworkMap;
use crate::linalg::dot;
use alloc::vec::Vec;
use num_traits::Float;

/// Parameters are laid out as `w` (m rows of length d) followed by `a`.
#[derive(Debug, Clone, Copy)]
pub struct TwoLayerNet {
    pub m: usize,
    pub d: usize,
}

impl TwoLayerNet {
    /// Lipschitz constant of tanh.
    pub const LIP: f64 = 1.0;
    /// tanh(0).
    pub const SIGMA0: f64 = 0.0;

    pub fn w<'a>(&self, theta: &'a [f64], i: usize) -> &'a [f64] {
        &theta[i * self.d..(i + 1) * self.d]
    }

    pub fn a<'a>(&self, theta: &'a [f64]) -> &'a [f64] {
        &theta[self.m * self.d..]
    }

    pub fn pack(w: &[f64], a: &[f64]) -> Vec<f64> {
        let mut t = w.to_vec();
        t.extend_from_slice(a);
        t
    }
}

impl NetworkMap for TwoLayerNet {
    fn param_dim(&self) -> usize {
        self.m * (self.d + 1)
    }
    fn input_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let a = self.a(theta);
        out[0] = (0..self.m).map(|i| a[i] * dot(self.w(theta, i), x).tanh()).sum();
    }
    fn grad(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let (m, d) = (self.m, self.d);
        let a = self.a(theta);
        for i in 0..m {
            let s = dot(self.w(theta, i), x).tanh();
            let ds = a[i] * (1.0 - s * s);
            for l in 0..d {
                out[i * d + l] = ds * x[l];
            }
            out[m * d + i] = s;
        }
    }
}

/// Replacement direction: the neuron closest to each teacher neuron takes
/// over its output weight, every other output weight is zeroed. Ties go to
/// the smallest index.
pub fn two_layer_nu0(net: &TwoLayerNet, theta: &[f64], teacher: &TwoLayerNet, theta_star: &[f64]) -> Vec<f64> {
    let mut nu = alloc::vec![0.0; net.param_dim()];
    let a = net.a(theta);
    for k in 0..net.m {
        nu[net.m * net.d + k] = -a[k];
    }
    let a_star = teacher.a(theta_star);
    for i in 0..teacher.m {
        let j = nearest_neuron(net, theta, teacher.w(theta_star, i));
        nu[net.m * net.d + j] += a_star[i];
    }
    nu
}

/// Index of the neuron whose input weights are closest to `target`.
pub fn nearest_neuron(net: &TwoLayerNet, theta: &[f64], target: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for k in 0..net.m {
        let dist: f64 = net.w(theta, k).iter().zip(target).map(|(p, q)| (p - q) * (p - q)).sum();
        if dist < best.1 {
            best = (k, dist);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::directional;
    use crate::domain::DataDist;
    use crate::model::testing::fd_gap;
    use crate::rng::Rng;

    #[test]
    fn gradient_matches_finite_differences() {
        let net = TwoLayerNet { m: 5, d: 3 };
        let mut rng = Rng::new(8);
        for _ in 0..50 {
            let t = rng.normal_vec(net.param_dim(), 1.0);
            let x = rng.normal_vec(3, 1.0);
            assert!(fd_gap(&net, &t, &x) < 1e-5);
        }
    }

    #[test]
    fn nu0_embedded_teacher_is_exact() {
        let net = TwoLayerNet { m: 3, d: 2 };
        let mut rng = Rng::new(3);
        let ts = rng.normal_vec(net.param_dim(), 1.0);
        let nu = two_layer_nu0(&net, &ts, &net, &ts);
        assert!(nu.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nu0_small_case() {
        let net = TwoLayerNet { m: 2, d: 1 };
        let teacher = TwoLayerNet { m: 1, d: 1 };
        let theta = TwoLayerNet::pack(&[0.9, -2.0], &[0.3, 0.7]);
        let star = TwoLayerNet::pack(&[1.0], &[1.5]);
        let nu = two_layer_nu0(&net, &theta, &teacher, &star);
        assert_eq!(nu, alloc::vec![0.0, 0.0, 1.5 - 0.3, -0.7]);
        // tie between the two neurons goes to index 0
        let theta = TwoLayerNet::pack(&[0.5, 1.5], &[0.3, 0.7]);
        let nu = two_layer_nu0(&net, &theta, &teacher, &star);
        assert_eq!(nu[2], 1.2);
    }

    #[test]
    fn nu0_first_order_identity() {
        let net = TwoLayerNet { m: 6, d: 2 };
        let teacher = TwoLayerNet { m: 2, d: 2 };
        let mut rng = Rng::new(21);
        let theta = rng.normal_vec(net.param_dim(), 1.0);
        let star = rng.normal_vec(teacher.param_dim(), 1.0);
        let nu = two_layer_nu0(&net, &theta, &teacher, &star);
        let pts = rng.normal_vec(200, 1.0);
        let d = DataDist::finite(2, pts, None).unwrap();
        let lin = directional(&net, &theta, &nu, &d);
        for i in 0..d.len() {
            let x = d.point(i);
            let mut f = [0.0];
            net.eval(&theta, x, &mut f);
            let mut want = 0.0;
            for k in 0..teacher.m {
                let j = nearest_neuron(&net, &theta, teacher.w(&star, k));
                want += teacher.a(&star)[k] * dot(net.w(&theta, j), x).tanh();
            }
            assert!((f[0] + lin[i] - want).abs() < 1e-10);
        }
    }
}
