//! Verifiers for the two-layer KL region and its ingredients.

use crate::domain::{inner_values, DataDist};
use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::linalg::{norm, sub};
use crate::loss::{evaluate, Quadratic};
use crate::model::{directional, nearest_neuron, sample_outputs, two_layer_nu0, NetworkMap, TwoLayerNet};
use crate::rng::Rng;
use alloc::vec::Vec;
use num_traits::Float;

/// κ = 3/(c·L^ε(θ₀))² for the discounted initial loss L^ε(θ₀).
pub fn two_layer_kappa(c: f64, l0_discounted: f64) -> f64 {
    3.0 / (c * l0_discounted).powi(2)
}

/// η = √ε/(2‖a*‖₁ L_σ D).
pub fn bassin_radius(eps: f64, a_star: &[f64], lip: f64, d_rad: f64) -> Result<f64> {
    let a1: f64 = a_star.iter().map(|a| a.abs()).sum();
    if !(eps > 0.0) || !(a1 > 0.0) || !(lip > 0.0) || !(d_rad > 0.0) {
        return Err(Error::InvalidParameter("bassin radius needs positive eps, a*, L and D"));
    }
    Ok(eps.sqrt() / (2.0 * a1 * lip * d_rad))
}

/// Every teacher neuron has a student neuron within `eta`.
pub fn in_bassin(net: &TwoLayerNet, theta: &[f64], teacher: &TwoLayerNet, theta_star: &[f64], eta: f64) -> bool {
    (0..teacher.m).all(|i| {
        let ws = teacher.w(theta_star, i);
        let j = nearest_neuron(net, theta, ws);
        norm(&sub(net.w(theta, j), ws)) <= eta
    })
}

fn data_radius(d: &DataDist) -> f64 {
    (0..d.len()).map(|i| norm(d.point(i))).fold(0.0, f64::max)
}

/// Initialization with `k` neurons planted within `radius` of each teacher
/// neuron, the remaining input weights N(0, 1), output weights N(0, 1/m).
pub fn planted_init(net: &TwoLayerNet, teacher: &TwoLayerNet, theta_star: &[f64], k: usize, radius: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    if net.d != teacher.d {
        return Err(Error::DimensionMismatch { expected: teacher.d, got: net.d });
    }
    if k * teacher.m > net.m {
        return Err(Error::TooLarge { limit: net.m, got: k * teacher.m });
    }
    let mut w = rng.normal_vec(net.m * net.d, 1.0);
    for i in 0..teacher.m {
        for s in 0..k {
            let j = i * k + s;
            let dir = rng.normal_vec(net.d, 1.0);
            let scale = radius * rng.uniform().powf(1.0 / net.d as f64) / norm(&dir);
            for l in 0..net.d {
                w[j * net.d + l] = teacher.w(theta_star, i)[l] + scale * dir[l];
            }
        }
    }
    let a = rng.normal_vec(net.m, 1.0 / (net.m as f64).sqrt());
    Ok(TwoLayerNet::pack(&w, &a))
}

#[derive(Debug, Clone, Copy)]
pub struct KlPoint {
    pub loss: f64,
    pub grad_sq: f64,
    /// (L − ε)₊²/(‖θ − θ₀‖ + c)².
    pub rhs: f64,
    /// sup over the support of |F(θ) + dF·ν₀ − f*|.
    pub residual: f64,
    pub nu0_norm: f64,
    /// Smallest c for which the inequality holds at this point.
    pub c_needed: f64,
}

impl KlPoint {
    pub fn margin(&self) -> f64 {
        self.grad_sq - self.rhs
    }
}

/// Both sides of the separable KL inequality at θ, with f* = F(θ*) and the
/// unhalved quadratic loss.
pub fn two_layer_kl_at(
    net: &TwoLayerNet,
    teacher: &TwoLayerNet,
    theta_star: &[f64],
    theta: &[f64],
    theta0: &[f64],
    eps: f64,
    c: f64,
    d: &DataDist,
) -> KlPoint {
    let target = sample_outputs(teacher, theta_star, d);
    let e = evaluate(net, &Quadratic::full(target.clone()), d, theta);
    let nu = two_layer_nu0(net, theta, teacher, theta_star);
    let f = sample_outputs(net, theta, d);
    let lin = directional(net, theta, &nu, d);
    let residual = (0..d.len()).map(|i| (f[i] + lin[i] - target[i]).abs()).fold(0.0, f64::max);
    let r = norm(&sub(theta, theta0));
    let excess = (e.loss - eps).max(0.0);
    let grad_sq = e.grad_norm_sq();
    KlPoint {
        loss: e.loss,
        grad_sq,
        rhs: (excess / (r + c)).powi(2),
        residual,
        nu0_norm: norm(&nu),
        c_needed: if excess == 0.0 { f64::NEG_INFINITY } else { excess / grad_sq.sqrt() - r },
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KlReport {
    pub samples: usize,
    pub attempts: usize,
    pub eta: f64,
    pub c: f64,
    /// Smallest c valid on every sample.
    pub c_empirical: f64,
    pub residual_max: f64,
    pub sqrt_eps: f64,
    pub min_margin: f64,
    pub violations: usize,
}

impl KlReport {
    pub fn holds(&self) -> bool {
        self.violations == 0 && self.residual_max <= self.sqrt_eps
    }
}

/// Draws θ uniformly in B(θ₀, r_ball), keeps those in the bassin of θ*, and
/// checks the linearization residual and the KL inequality with
/// c = ‖a₀‖ + ‖a*‖ at each.
pub fn two_layer_kl_verify(
    net: &TwoLayerNet,
    teacher: &TwoLayerNet,
    theta_star: &[f64],
    eps: f64,
    theta0: &[f64],
    r_ball: f64,
    samples: usize,
    d: &DataDist,
    rng: &mut Rng,
) -> Result<KlReport> {
    let eta = bassin_radius(eps, teacher.a(theta_star), TwoLayerNet::LIP, data_radius(d))?;
    let c = norm(net.a(theta0)) + norm(teacher.a(theta_star));
    let p = net.param_dim();
    let mut rep = KlReport {
        samples: 0,
        attempts: 0,
        eta,
        c,
        c_empirical: f64::NEG_INFINITY,
        residual_max: 0.0,
        sqrt_eps: eps.sqrt(),
        min_margin: f64::INFINITY,
        violations: 0,
    };
    let limit = 1000 * samples.max(1);
    while rep.samples < samples {
        if rep.attempts == limit {
            return Err(Error::Degenerate("bassin condition unsatisfiable in the ball"));
        }
        rep.attempts += 1;
        let dir = rng.normal_vec(p, 1.0);
        let s = r_ball * rng.uniform().powf(1.0 / p as f64) / norm(&dir);
        let theta: Vec<f64> = theta0.iter().zip(&dir).map(|(t, v)| t + s * v).collect();
        if !in_bassin(net, &theta, teacher, theta_star, eta) {
            continue;
        }
        rep.samples += 1;
        let pt = two_layer_kl_at(net, teacher, theta_star, &theta, theta0, eps, c, d);
        rep.residual_max = rep.residual_max.max(pt.residual);
        rep.c_empirical = rep.c_empirical.max(pt.c_needed);
        rep.min_margin = rep.min_margin.min(pt.margin());
        if !(pt.margin() > 0.0) || pt.residual > rep.sqrt_eps {
            rep.violations += 1;
        }
    }
    Ok(rep)
}

/// Monte-Carlo P(every teacher neuron has ≥ k of m fresh N(0, I) neurons within η/2);
/// trial t uses `Rng::split(seed, t)`.
pub fn bassin_probability(teacher: &TwoLayerNet, theta_star: &[f64], m: usize, eta: f64, k: usize, trials: usize, seed: u64) -> Result<f64> {
    if trials < 100 {
        return Err(Error::InvalidParameter("bassin probability needs at least 100 trials"));
    }
    if k > m {
        return Ok(0.0);
    }
    let dim = teacher.d;
    let mut hits = 0;
    for t in 0..trials {
        let mut rng = Rng::split(seed, t as u64);
        let w = rng.normal_vec(m * dim, 1.0);
        let ok = (0..teacher.m).all(|i| {
            let ws = teacher.w(theta_star, i);
            (0..m).filter(|&j| norm(&sub(&w[j * dim..(j + 1) * dim], ws)) <= 0.5 * eta).count() >= k
        });
        if ok {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}

#[derive(Debug, Clone, Copy)]
pub struct RadiusReport {
    pub checked: usize,
    pub violations: usize,
    /// max of (L_t − ε)(r_t + c)/((L₀ − ε)c).
    pub worst: f64,
}

impl RadiusReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// (L_t − ε)(r_t + c) ≤ (L₀ − ε)c along the prefix where L > ε, with r_t the
/// cumulative path length between records.
pub fn radius_loss_check(traj: &Trajectory, c: f64, eps: f64) -> RadiusReport {
    let mut rep = RadiusReport { checked: 0, violations: 0, worst: 0.0 };
    let l0 = traj.losses[0] - eps;
    if !(l0 > 0.0) {
        return rep;
    }
    let r = traj.path_lengths();
    for k in 0..traj.len() {
        let l = traj.losses[k] - eps;
        if !(l > 0.0) {
            break;
        }
        let ratio = l * (r[k] + c) / (l0 * c);
        rep.checked += 1;
        rep.worst = rep.worst.max(ratio);
        if ratio > 1.0 + 1e-12 {
            rep.violations += 1;
        }
    }
    rep
}

#[derive(Debug, Clone, Copy)]
pub struct InitialLossRow {
    pub m: usize,
    pub mean: f64,
    /// 2(σ(0)² + L_σ²D²d).
    pub bound: f64,
    /// bound·(1 + 3/√trials).
    pub limit: f64,
}

impl InitialLossRow {
    pub fn holds(&self) -> bool {
        self.mean <= self.limit
    }
}

/// Monte-Carlo mean of ‖f_θ‖²_D over fresh initializations for each width;
/// width index i, trial t use `Rng::split(seed, i·trials + t)`.
pub fn initial_loss_bound_check(m_grid: &[usize], d: &DataDist, trials: usize, seed: u64) -> Result<Vec<InitialLossRow>> {
    if trials < 100 {
        return Err(Error::InvalidParameter("initial loss check needs at least 100 trials"));
    }
    let dim = d.dim();
    let big_d = data_radius(d);
    let s0 = TwoLayerNet::SIGMA0;
    let lip = TwoLayerNet::LIP;
    let bound = 2.0 * (s0 * s0 + lip * lip * big_d * big_d * dim as f64);
    let mut rows = Vec::with_capacity(m_grid.len());
    for (i, &m) in m_grid.iter().enumerate() {
        if m == 0 {
            return Err(Error::EmptyDimension);
        }
        let net = TwoLayerNet { m, d: dim };
        let mut sum = 0.0;
        for t in 0..trials {
            let mut rng = Rng::split(seed, (i * trials + t) as u64);
            let w = rng.normal_vec(m * dim, 1.0);
            let a = rng.normal_vec(m, 1.0 / (m as f64).sqrt());
            let f = sample_outputs(&net, &TwoLayerNet::pack(&w, &a), d);
            sum += inner_values(d, &f, &f, 1);
        }
        rows.push(InitialLossRow { m, mean: sum / trials as f64, bound, limit: bound * (1.0 + 3.0 / (trials as f64).sqrt()) });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate, FlowConfig, Instruments};

    fn disc(n: usize, rng: &mut Rng) -> DataDist {
        let mut pts = Vec::with_capacity(2 * n);
        while pts.len() < 2 * n {
            let (x, y) = (rng.range(-1.0, 1.0), rng.range(-1.0, 1.0));
            if x * x + y * y <= 1.0 {
                pts.extend_from_slice(&[x, y]);
            }
        }
        DataDist::finite(2, pts, None).unwrap()
    }

    #[test]
    fn embedded_teacher() {
        let mut rng = Rng::new(2);
        let teacher = TwoLayerNet { m: 2, d: 2 };
        let star = rng.normal_vec(teacher.param_dim(), 1.0);
        let d = disc(32, &mut rng);
        let pt = two_layer_kl_at(&teacher, &teacher, &star, &star, &star, 0.01, 1.0, &d);
        assert!(pt.loss == 0.0 && pt.rhs == 0.0);
        assert!(pt.residual < 1e-12);
    }

    #[test]
    fn bassin_probability_examples() {
        let teacher = TwoLayerNet { m: 1, d: 1 };
        let star = [0.0, 1.0];
        assert_eq!(bassin_probability(&teacher, &star, 8, 1e6, 1, 100, 0).unwrap(), 1.0);
        assert_eq!(bassin_probability(&teacher, &star, 8, 1.0, 9, 100, 0).unwrap(), 0.0);
        // P(|N(0,1)| > 1/2) = 0.617; 0.617^32 ≈ 2e-7
        let p = bassin_probability(&teacher, &star, 32, 1.0, 1, 2000, 3).unwrap();
        assert!(p > 0.999);
        let p4 = bassin_probability(&teacher, &star, 4, 1.0, 1, 4000, 3).unwrap();
        let want = 1.0 - 0.617075f64.powi(4);
        assert!((p4 - want).abs() < 0.03, "{p4} vs {want}");
    }

    #[test]
    fn initial_loss_examples() {
        let d = DataDist::finite(1, alloc::vec![-1.0, 0.5, 1.0], None).unwrap();
        let rows = initial_loss_bound_check(&[4, 64], &d, 200, 9).unwrap();
        for r in rows {
            assert_eq!(r.bound, 2.0);
            assert!(r.holds(), "{r:?}");
        }
    }

    #[test]
    fn kl_region_small() {
        let mut rng = Rng::new(17);
        let teacher = TwoLayerNet { m: 2, d: 2 };
        let mut star = rng.normal_vec(4, 1.0);
        star.extend_from_slice(&[0.8, -0.6]);
        let net = TwoLayerNet { m: 16, d: 2 };
        let d = disc(48, &mut rng);
        let eps = 0.01;
        let eta = bassin_radius(eps, teacher.a(&star), 1.0, data_radius(&d)).unwrap();
        let k = 4;
        let theta0 = planted_init(&net, &teacher, &star, k, 0.5 * eta, &mut rng).unwrap();
        assert!(in_bassin(&net, &theta0, &teacher, &star, 0.5 * eta));
        let r_ball = 0.5 * eta * (k as f64).sqrt();
        let rep = two_layer_kl_verify(&net, &teacher, &star, eps, &theta0, r_ball, 20, &d, &mut rng).unwrap();
        assert!(rep.holds(), "{rep:?}");
        assert_eq!(rep.attempts, 20);
        assert!(rep.c_empirical <= rep.c);

        let target = sample_outputs(&teacher, &star, &d);
        let cfg = FlowConfig::euler(0.05, 20.0);
        let tr = integrate(&net, &Quadratic::full(target), &theta0, &d, &cfg, Instruments::default()).unwrap();
        let rr = radius_loss_check(&tr, rep.c, eps);
        assert!(rr.checked > 0 && rr.holds(), "{rr:?}");
    }
}
