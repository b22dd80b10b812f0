//! Explicit time-stepping of ∂θ = −∇L(θ) with per-record diagnostics.

use crate::bounds::BoundCurve;
use crate::domain::{inner_values, DataDist};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, axpy, norm};
use crate::loss::{evaluate, Desingularizer, FunctionalLoss};
use crate::model::NetworkMap;
use alloc::vec::Vec;
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy)]
pub struct FlowConfig {
    pub step: f64,
    pub max_time: f64,
    pub stop_loss: f64,
    pub record_every: usize,
    pub integrator: Integrator,
}

impl FlowConfig {
    pub fn euler(step: f64, max_time: f64) -> Self {
        FlowConfig { step, max_time, stop_loss: 0.0, record_every: 1, integrator: Integrator::Euler }
    }

    pub fn rk4(step: f64, max_time: f64) -> Self {
        FlowConfig { integrator: Integrator::Rk4, ..FlowConfig::euler(step, max_time) }
    }

    pub fn stop_loss(mut self, v: f64) -> Self {
        self.stop_loss = v;
        self
    }

    pub fn record_every(mut self, k: usize) -> Self {
        self.record_every = k;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidParameter("step must be positive"));
        }
        if !(self.max_time >= 0.0) {
            return Err(Error::InvalidParameter("max_time must be non-negative"));
        }
        if !(self.stop_loss >= 0.0) {
            return Err(Error::InvalidParameter("stop_loss must be non-negative"));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Halt {
    /// L(θ₀) = 0: the flow is constant.
    Trivial,
    StopLoss,
    MaxTime,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub params: Vec<Vec<f64>>,
    pub losses: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub rayleigh: Option<Vec<f64>>,
    pub kl_residual: Option<Vec<f64>>,
    pub bound: Option<Vec<f64>>,
    pub halt: Halt,
    pub stop_loss: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.halt == Halt::Trivial
    }

    pub fn final_loss(&self) -> f64 {
        self.losses[self.losses.len() - 1]
    }

    pub fn final_param(&self) -> &[f64] {
        &self.params[self.params.len() - 1]
    }

    pub fn attach_bound(&mut self, curve: &BoundCurve) {
        self.bound = Some(self.times.iter().map(|&t| curve.eval(t)).collect());
    }

    /// Largest loss/bound ratio over the records, if a bound is attached.
    pub fn domination_ratio(&self) -> Option<f64> {
        let b = self.bound.as_ref()?;
        Some(self.losses.iter().zip(b).map(|(l, b)| if *b > 0.0 { l / b } else if *l > 0.0 { f64::INFINITY } else { 0.0 }).fold(0.0, f64::max))
    }

    pub fn bound_dominates(&self) -> bool {
        match &self.bound {
            Some(b) => self.losses.iter().zip(b).all(|(l, b)| *l <= b * (1.0 + 1e-6)),
            None => false,
        }
    }

    /// Cumulative path length Σ‖θ_{k+1} − θ_k‖ at each record.
    pub fn path_lengths(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut r = 0.0;
        out.push(0.0);
        for w in self.params.windows(2) {
            r += norm(&crate::linalg::sub(&w[1], &w[0]));
            out.push(r);
        }
        out
    }
}

/// Optional diagnostics computed at each record.
#[derive(Clone, Copy, Default)]
pub struct Instruments<'a> {
    pub rayleigh: bool,
    pub desing: Option<&'a dyn Desingularizer>,
}

pub fn integrate<M, L>(
    model: &M,
    loss: &L,
    theta0: &[f64],
    d: &DataDist,
    cfg: &FlowConfig,
    inst: Instruments<'_>,
) -> Result<Trajectory>
where
    M: NetworkMap + ?Sized,
    L: FunctionalLoss + ?Sized,
{
    cfg.validate()?;
    if theta0.len() != model.param_dim() {
        return Err(Error::DimensionMismatch { expected: model.param_dim(), got: theta0.len() });
    }
    let c = loss.out_dim();
    let mut traj = Trajectory {
        times: Vec::new(),
        params: Vec::new(),
        losses: Vec::new(),
        grad_norms: Vec::new(),
        rayleigh: inst.rayleigh.then(Vec::new),
        kl_residual: inst.desing.map(|_| Vec::new()),
        bound: None,
        halt: Halt::MaxTime,
        stop_loss: cfg.stop_loss,
    };
    let record = |traj: &mut Trajectory, t: f64, theta: &[f64], e: &crate::loss::Evaluation| {
        let g2 = e.grad_norm_sq();
        traj.times.push(t);
        traj.params.push(theta.to_vec());
        traj.losses.push(e.loss);
        traj.grad_norms.push(g2.sqrt());
        if let Some(r) = traj.rayleigh.as_mut() {
            let f2 = inner_values(d, &e.fgrad, &e.fgrad, c);
            r.push(if f2 > 0.0 { g2 / f2 } else { f64::NAN });
        }
        if let (Some(k), Some(p)) = (traj.kl_residual.as_mut(), inst.desing) {
            k.push(if e.loss > 0.0 { p.dphi(e.loss) * g2 } else { f64::NAN });
        }
    };

    let mut theta = theta0.to_vec();
    let mut e = evaluate(model, loss, d, &theta);
    if !e.loss.is_finite() {
        return Err(Error::NonFinite("initial loss"));
    }
    record(&mut traj, 0.0, &theta, &e);
    if e.loss == 0.0 {
        traj.halt = Halt::Trivial;
        return Ok(traj);
    }
    let l0 = e.loss;
    let steps = (cfg.max_time / cfg.step).round() as usize;
    let mut k = 0;
    loop {
        if e.loss <= cfg.stop_loss {
            traj.halt = Halt::StopLoss;
            break;
        }
        if k == steps {
            traj.halt = Halt::MaxTime;
            break;
        }
        if !all_finite(&e.grad) {
            return Err(Error::NonFinite("gradient"));
        }
        match cfg.integrator {
            Integrator::Euler => axpy(-cfg.step, &e.grad, &mut theta),
            Integrator::Rk4 => rk4_step(model, loss, d, &mut theta, &e.grad, cfg.step)?,
        }
        let next = evaluate(model, loss, d, &theta);
        if !next.loss.is_finite() {
            return Err(Error::NonFinite("loss"));
        }
        if next.loss > e.loss * (1.0 + 1e-6) + 4.0 * f64::EPSILON * l0 {
            return Err(Error::LossIncreased { step: k + 1, before: e.loss, after: next.loss });
        }
        e = next;
        k += 1;
        let last = e.loss <= cfg.stop_loss || k == steps;
        if k % cfg.record_every == 0 || last {
            record(&mut traj, k as f64 * cfg.step, &theta, &e);
        }
    }
    Ok(traj)
}

fn rk4_step<M, L>(model: &M, loss: &L, d: &DataDist, theta: &mut Vec<f64>, g1: &[f64], h: f64) -> Result<()>
where
    M: NetworkMap + ?Sized,
    L: FunctionalLoss + ?Sized,
{
    let at = |base: &[f64], dir: &[f64], s: f64| {
        let mut p = base.to_vec();
        axpy(-s, dir, &mut p);
        evaluate(model, loss, d, &p).grad
    };
    let k2 = at(theta, g1, 0.5 * h);
    let k3 = at(theta, &k2, 0.5 * h);
    let k4 = at(theta, &k3, h);
    if !all_finite(&k2) || !all_finite(&k3) || !all_finite(&k4) {
        return Err(Error::NonFinite("gradient"));
    }
    for i in 0..theta.len() {
        theta[i] -= h / 6.0 * (g1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

/// Final parameter of a flow that reached its stop loss, certified by a
/// small final gradient: ‖∇L‖ ≤ 10·√stop_loss·‖∇L₀‖/√L₀.
pub fn limit_param(traj: &Trajectory) -> Result<Vec<f64>> {
    match traj.halt {
        Halt::Trivial => Ok(traj.params[0].clone()),
        Halt::MaxTime => Err(Error::NotConverged),
        Halt::StopLoss => {
            let (g0, l0) = (traj.grad_norms[0], traj.losses[0]);
            let threshold = 10.0 * traj.stop_loss.sqrt() * g0 / l0.sqrt();
            if traj.grad_norms[traj.len() - 1] > threshold {
                return Err(Error::NotConverged);
            }
            Ok(traj.final_param().to_vec())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{LogDesing, Quadratic};
    use crate::model::LinearModel;

    fn square() -> (LinearModel, Quadratic, DataDist) {
        // L(θ) = θ²
        let d = DataDist::finite(1, alloc::vec![1.0], None).unwrap();
        (LinearModel { d: 1 }, Quadratic::full(alloc::vec![0.0]), d)
    }

    #[test]
    fn trivial_flow() {
        let (m, q, d) = square();
        let tr = integrate(&m, &q, &[0.0], &d, &FlowConfig::euler(0.1, 1.0), Instruments::default()).unwrap();
        assert!(tr.is_trivial());
        assert_eq!(tr.len(), 1);
        assert_eq!(limit_param(&tr).unwrap(), alloc::vec![0.0]);
    }

    #[test]
    fn euler_recursion() {
        let (m, q, d) = square();
        let eta = 0.01;
        let tr = integrate(&m, &q, &[1.5], &d, &FlowConfig::euler(eta, 1.0), Instruments::default()).unwrap();
        for (k, p) in tr.params.iter().enumerate() {
            let want = 1.5 * (1.0 - 2.0 * eta).powi(k as i32);
            assert!((p[0] - want).abs() < 1e-13 * want.abs().max(1.0));
        }
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn quadratic_limit() {
        let (m, q, d) = square();
        let cfg = FlowConfig::euler(0.05, 100.0).stop_loss(1e-20);
        let tr = integrate(&m, &q, &[2.0], &d, &cfg, Instruments::default()).unwrap();
        assert_eq!(tr.halt, Halt::StopLoss);
        assert!(limit_param(&tr).unwrap()[0].abs() < 1e-9);
        let short = integrate(&m, &q, &[2.0], &d, &FlowConfig::euler(0.05, 0.5).stop_loss(1e-20), Instruments::default()).unwrap();
        assert_eq!(limit_param(&short), Err(Error::NotConverged));
    }

    #[test]
    fn step_too_large_is_reported() {
        let (m, q, d) = square();
        let r = integrate(&m, &q, &[1.0], &d, &FlowConfig::euler(1.5, 10.0), Instruments::default());
        assert!(matches!(r, Err(Error::LossIncreased { .. })));
    }

    #[test]
    fn identity_covariance_exponential() {
        let s = 5f64.sqrt();
        let mut pts = alloc::vec![0.0; 25];
        for k in 0..5 {
            pts[k * 5 + k] = s;
        }
        let d = DataDist::finite(5, pts, None).unwrap();
        let m = LinearModel { d: 5 };
        let q = Quadratic::full(d.sample(|x| x[0] - x[3]));
        let t0 = [0.5, 0.2, -0.3, 0.0, 1.0];
        let inst = Instruments { rayleigh: true, desing: Some(&LogDesing) };
        let tr = integrate(&m, &q, &t0, &d, &FlowConfig::euler(1e-4, 1.0).record_every(1000), inst).unwrap();
        let l0 = tr.losses[0];
        let want = l0 * (-4.0f64).exp();
        assert!((tr.final_loss() - want).abs() < 0.01 * want);
        assert!(tr.rayleigh.as_ref().unwrap().iter().all(|r| (r - 1.0).abs() < 1e-12));
        assert!(tr.kl_residual.as_ref().unwrap().iter().all(|r| (r - 4.0).abs() < 1e-9));
        let rk = integrate(&m, &q, &t0, &d, &FlowConfig::rk4(1e-3, 1.0), Instruments::default()).unwrap();
        assert!((rk.final_loss() - want).abs() < 1e-9 * want);
    }

    #[test]
    fn first_order_convergence() {
        let mut rng = crate::rng::Rng::new(50);
        let d = DataDist::finite(3, rng.normal_vec(24, 1.0), None).unwrap();
        let m = LinearModel { d: 3 };
        let q = Quadratic::full(rng.normal_vec(8, 1.0));
        let t0 = rng.normal_vec(3, 1.0);
        let run = |h: f64, every: usize| {
            integrate(&m, &q, &t0, &d, &FlowConfig::euler(h, 1.0).record_every(every), Instruments::default()).unwrap().losses
        };
        let reference = integrate(&m, &q, &t0, &d, &FlowConfig::rk4(1e-3, 1.0).record_every(100), Instruments::default()).unwrap().losses;
        let coarse = run(1e-2, 10);
        let fine = run(5e-3, 20);
        let dev = |a: &[f64]| a.iter().zip(&reference).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let ratio = dev(&coarse) / dev(&fine);
        assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
    }
}
