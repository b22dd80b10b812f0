//! Closed-form convergence bounds and the certificate constants behind them.

mod sines;
mod two_layer;

pub use sines::{
    draw_admissible, eta_scan, gershgorin_chain, lemma_a8_check, sine_constants, sine_constants_raw, sine_mu0,
    sine_rayleigh_sweep, sine_rayleigh_verify, Amplitudes, GershgorinReport, LemmaReport, SineConfig, SineConstants,
    SineRayleighReport, SweepReport,
};
pub use two_layer::{
    bassin_probability, bassin_radius, in_bassin, initial_loss_bound_check, planted_init, radius_loss_check, two_layer_kappa,
    two_layer_kl_at, two_layer_kl_verify, InitialLossRow, KlPoint, KlReport, RadiusReport,
};

use crate::error::{Error, Result};
use crate::loss::{Desingularizer, LogisticDesing};
use crate::specfun::lambert_w0_of_exp;
use alloc::vec::Vec;
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundKind {
    /// L₀·e^{−rate·t}.
    Exp { l0: f64, rate: f64 },
    /// φ⁻¹(C − rate·t) for the logistic desingularizer, C = φ(L₀).
    Logistic { c: f64, rate: f64 },
    /// ε₀ + (L₀⁻³ + κt)^{−1/3}.
    InverseCube { eps0: f64, l0: f64, kappa: f64 },
}

#[derive(Debug, Clone)]
pub struct BoundCurve {
    pub kind: BoundKind,
    pub certificate: Vec<(&'static str, f64)>,
}

impl BoundCurve {
    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            BoundKind::Exp { l0, rate } => l0 * (-rate * t).exp(),
            BoundKind::Logistic { c, rate } => {
                let w = lambert_w0_of_exp(rate * t - c);
                (1.0 / w).ln_1p()
            }
            BoundKind::InverseCube { eps0, l0, kappa } => eps0 + (l0.powi(-3) + kappa * t).powf(-1.0 / 3.0),
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.certificate.iter().find(|(k, _)| *k == key).map(|&(_, v)| v)
    }

    /// Checks monotonicity on `n` evenly spaced points of [0, t_max].
    pub fn is_non_increasing(&self, t_max: f64, n: usize) -> bool {
        let mut prev = self.eval(0.0);
        for k in 1..n {
            let v = self.eval(t_max * k as f64 / (n - 1) as f64);
            if !(v <= prev * (1.0 + 1e-12) + 1e-300) {
                return false;
            }
            prev = v;
        }
        true
    }
}

fn check_nonneg(v: f64, what: &'static str) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::InvalidParameter(what));
    }
    Ok(())
}

/// L(θ_t) ≤ L₀·e^{−4λ⁺t} for a linear model under the unhalved quadratic loss.
pub fn linear_exp_bound(l0: f64, lam_plus: f64) -> Result<BoundCurve> {
    check_nonneg(l0, "L0 must be non-negative")?;
    check_nonneg(lam_plus, "lam_plus must be non-negative")?;
    Ok(BoundCurve {
        kind: BoundKind::Exp { l0, rate: 4.0 * lam_plus },
        certificate: alloc::vec![("L0", l0), ("lam_plus", lam_plus)],
    })
}

pub fn lemniscate_bound(l0: f64, mu0: f64, lam_star: f64) -> Result<BoundCurve> {
    check_nonneg(l0, "L0 must be non-negative")?;
    if !(mu0 > 0.0 && mu0 <= 1.0) {
        return Err(Error::InvalidParameter("mu0 must lie in (0, 1]"));
    }
    if !(lam_star > 0.0) {
        return Err(Error::InvalidParameter("lam_star must be positive"));
    }
    Ok(BoundCurve {
        kind: BoundKind::Exp { l0, rate: 4.0 * mu0 * mu0 * lam_star },
        certificate: alloc::vec![("L0", l0), ("mu0", mu0), ("lam_star", lam_star)],
    })
}

/// Exponential decay L₀·e^{−2Bt} implied by a Rayleigh floor B under the halved quadratic loss.
pub fn halved_quadratic_bound(l0: f64, floor: f64) -> Result<BoundCurve> {
    check_nonneg(l0, "L0 must be non-negative")?;
    check_nonneg(floor, "floor must be non-negative")?;
    Ok(BoundCurve { kind: BoundKind::Exp { l0, rate: 2.0 * floor }, certificate: alloc::vec![("L0", l0), ("B", floor)] })
}

pub fn logistic_bound(eps: f64, kappa: f64, l0: f64) -> Result<BoundCurve> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter("eps must be positive"));
    }
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidParameter("kappa must lie in (0, 1]"));
    }
    if !(l0 > 0.0) || !l0.is_finite() {
        return Err(Error::InvalidParameter("L0 must be positive"));
    }
    let c = LogisticDesing.phi(l0);
    let rate = eps * eps * kappa * kappa;
    Ok(BoundCurve {
        kind: BoundKind::Logistic { c, rate },
        certificate: alloc::vec![("eps", eps), ("kappa", kappa), ("L0", l0), ("C", c), ("tau", 1.0 / rate)],
    })
}

fn logistic_parts(curve: &BoundCurve) -> Result<(f64, f64)> {
    match curve.kind {
        BoundKind::Logistic { c, rate } => Ok((c, 1.0 / rate)),
        _ => Err(Error::InvalidParameter("not a logistic bound")),
    }
}

/// Smallest t on a fine geometric grid past which the Hoorfar lower bound on
/// W₀ gives bound(t) ≤ 2τ/t, i.e. t/(2τ) − C − ln(t/τ − C) ≥ 0 with t/τ − C ≥ 2.
pub fn logistic_knee(curve: &BoundCurve) -> Result<f64> {
    let (c, tau) = logistic_parts(curve)?;
    let mut t = tau * (c + 2.0).max(1e-3);
    for _ in 0..100_000 {
        let a = t / tau - c;
        if a >= 2.0 && t / (2.0 * tau) - c - a.ln() >= 0.0 {
            return Ok(t);
        }
        t *= 1.001;
    }
    Err(Error::NoConvergence { sweeps: 100_000 })
}

#[derive(Debug, Clone, Copy)]
pub struct TailReport {
    pub knee: f64,
    pub t_end: f64,
    pub points: usize,
    pub violations: usize,
    /// max of bound(t)·t/(2τ) over the checked grid.
    pub worst: f64,
}

impl TailReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Checks bound(t) ≤ 2τ/t on a geometric grid from the knee to `decades` decades past it.
pub fn logistic_tail_check(curve: &BoundCurve, decades: f64, points: usize) -> Result<TailReport> {
    let (_, tau) = logistic_parts(curve)?;
    let knee = logistic_knee(curve)?;
    let t_end = knee * 10f64.powf(decades);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for k in 0..points {
        let t = knee * (t_end / knee).powf(k as f64 / (points - 1) as f64);
        let r = curve.eval(t) * t / (2.0 * tau);
        worst = worst.max(r);
        if r > 1.0 {
            violations += 1;
        }
    }
    Ok(TailReport { knee, t_end, points, violations, worst })
}

/// max/min of bound(t)·t over the last decade [t_end/10, t_end].
pub fn last_decade_spread(curve: &BoundCurve, t_end: f64, points: usize) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 0..points {
        let t = t_end * 10f64.powf(k as f64 / (points - 1) as f64 - 1.0);
        let v = curve.eval(t) * t;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi / lo
}

pub fn two_layer_bound(l0: f64, eps0: f64, kappa: f64) -> Result<BoundCurve> {
    if !(l0 > 0.0 && eps0 >= 0.0 && kappa > 0.0) {
        return Err(Error::InvalidParameter("two-layer bound needs positive L0 and kappa"));
    }
    Ok(BoundCurve {
        kind: BoundKind::InverseCube { eps0, l0, kappa },
        certificate: alloc::vec![("L0", l0), ("eps0", eps0), ("kappa", kappa)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_examples() {
        let b = linear_exp_bound(2.0, 0.5).unwrap();
        assert_eq!(b.eval(0.0), 2.0);
        assert!((b.eval(1.0) - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        let flat = linear_exp_bound(2.0, 0.0).unwrap();
        assert_eq!(flat.eval(1e6), 2.0);
        assert!(linear_exp_bound(-1.0, 1.0).is_err());
    }

    #[test]
    fn lemniscate_sphere_rate() {
        let b = lemniscate_bound(9.0, 1.0, 0.5).unwrap();
        assert!((b.eval(1.0) - 9.0 * (-2.0f64).exp()).abs() < 1e-14);
        assert!(lemniscate_bound(9.0, 0.0, 0.5).is_err());
        assert!(lemniscate_bound(9.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn logistic_examples() {
        let b = logistic_bound(0.3, 0.5, 2f64.ln()).unwrap();
        assert!((b.get("C").unwrap() + 1.0).abs() < 1e-15);
        for l0 in [1e-3, 0.1, 2f64.ln(), 1.0, 5.0, 30.0] {
            let b = logistic_bound(0.2, 1.0 / 3.0, l0).unwrap();
            assert!((b.eval(0.0) - l0).abs() < 1e-9 * l0.max(1.0), "{l0}");
        }
    }

    #[test]
    fn logistic_tail() {
        for (eps, kappa, l0) in [(0.5, 1.0 / 3.0, 1.1), (0.05, 0.01, 1.38), (1.0, 1.0, 0.01)] {
            let b = logistic_bound(eps, kappa, l0).unwrap();
            let r = logistic_tail_check(&b, 5.0, 400).unwrap();
            assert!(r.holds(), "{r:?}");
            let tau = b.get("tau").unwrap();
            assert!(last_decade_spread(&b, 1e5 * tau, 200) < 2.0);
        }
    }

    #[test]
    fn two_layer_examples() {
        let b = two_layer_bound(2.0, 0.1, 3.0).unwrap();
        assert!((b.eval(0.0) - 2.1).abs() < 1e-15);
        assert!((b.eval(1e30) - 0.1).abs() < 1e-9);
        assert!((two_layer_kappa(2.0, 0.5) - 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn curves_are_non_increasing(l0 in 1e-3f64..50.0, a in 1e-3f64..2.0, b in 1e-3f64..1.0) {
            prop_assert!(linear_exp_bound(l0, a).unwrap().is_non_increasing(10.0, 1000));
            prop_assert!(lemniscate_bound(l0, b, a).unwrap().is_non_increasing(10.0, 1000));
            let lg = logistic_bound(a, b, l0).unwrap();
            let tau = lg.get("tau").unwrap();
            prop_assert!(lg.is_non_increasing(100.0 * tau, 1000));
            prop_assert!(two_layer_bound(l0, b, a).unwrap().is_non_increasing(1e3, 1000));
        }

        #[test]
        fn logistic_round_trip(l0 in 1e-4f64..40.0, eps in 0.01f64..2.0, kappa in 0.01f64..1.0) {
            let b = logistic_bound(eps, kappa, l0).unwrap();
            prop_assert!((b.eval(0.0) - l0).abs() <= 1e-9 * l0.max(1.0));
        }
    }
}
