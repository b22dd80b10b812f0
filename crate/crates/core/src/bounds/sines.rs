//! Certificate constants for the paired sum-of-sines regime.

use crate::domain::{DataDist, DEFAULT_NODES};
use crate::error::{Error, Result};
use crate::linalg::{gershgorin_max, gershgorin_min, sym_eigen};
use crate::model::{sample_outputs, sine_gram, SumOfSines};
use crate::ntk::{ntk_rayleigh, shattering_matrices};
use crate::rng::Rng;
use crate::specfun::{first_zero_of_phi, harmonic, phi, psi};
use alloc::vec::Vec;
use num_traits::Float;

const SLACK: f64 = 1e-12;

/// Window half-width `r`, pairing/separation parameters `eta`, `mu`, amplitude
/// floor `alpha`, current frequencies `omega` and target frequencies `omega_star`.
#[derive(Debug, Clone)]
pub struct SineConfig {
    pub m: usize,
    pub r: f64,
    pub eta: f64,
    pub mu: f64,
    pub alpha: f64,
    pub omega: Vec<f64>,
    pub omega_star: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Amplitudes {
    pub a: Vec<f64>,
    pub a_star: Vec<f64>,
}

impl SineConfig {
    /// ε = η/R.
    pub fn eps(&self) -> f64 {
        self.eta / self.r
    }

    /// δ = μ/R.
    pub fn delta(&self) -> f64 {
        self.mu / self.r
    }

    pub fn validate(&self) -> Result<()> {
        check_params(self.m, self.r, self.eta, self.mu, self.alpha)?;
        if self.omega.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: self.omega.len() });
        }
        if self.omega_star.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: self.omega_star.len() });
        }
        let (eps, delta) = (self.eps(), self.delta());
        let mut prev = 0.0;
        for &w in &self.omega_star {
            if w - prev < delta * (1.0 - SLACK) {
                return Err(Error::InvalidParameter("target frequencies must be ascending and mu/R-separated"));
            }
            prev = w;
        }
        for (w, ws) in self.omega.iter().zip(&self.omega_star) {
            if (w - ws).abs() > eps * (1.0 + SLACK) {
                return Err(Error::InvalidParameter("frequencies must be eta/R-paired"));
            }
        }
        Ok(())
    }

    pub fn theta(&self, a: &[f64]) -> Vec<f64> {
        let mut t = a.to_vec();
        t.extend_from_slice(&self.omega);
        t
    }

    pub fn theta_star(&self, a_star: &[f64]) -> Vec<f64> {
        let mut t = a_star.to_vec();
        t.extend_from_slice(&self.omega_star);
        t
    }
}

fn check_params(m: usize, r: f64, eta: f64, mu: f64, alpha: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::EmptyDimension);
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter("window half-width must be positive"));
    }
    if !(eta > 0.0) || eta > first_zero_of_phi() {
        return Err(Error::InvalidParameter("eta must lie in (0, x0]"));
    }
    if !(mu > 2.0 * eta) || !mu.is_finite() {
        return Err(Error::InvalidParameter("eta must be below mu/2"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter("alpha must lie in (0, 1]"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineConstants {
    pub kappa0: f64,
    pub rho0: f64,
    /// φ(η) − 1/(μ − η), the per-unit-α singular value floor.
    pub floor: f64,
    /// Lower bound on the Rayleigh quotient; 0 when vacuous.
    pub bound: f64,
    pub vacuous: bool,
}

pub fn sine_constants_raw(m: usize, eta: f64, mu: f64, alpha: f64) -> Result<SineConstants> {
    if m == 0 {
        return Err(Error::EmptyDimension);
    }
    if !(eta >= 0.0) || !(mu > 2.0 * eta) {
        return Err(Error::InvalidParameter("constants need 0 <= eta < mu/2"));
    }
    let h = harmonic(m)?;
    let q = 1.0 / (mu - eta);
    let floor = phi(eta) - q;
    let kappa0 = floor / (phi(0.0) + q);
    let rho0 = (psi(eta) + q + 4.0 * h / (mu - 2.0 * eta)) / floor;
    let vacuous = !(floor > 0.0) || !(kappa0 > rho0);
    let bound = if vacuous { 0.0 } else { alpha * floor * (kappa0 - rho0) * (kappa0 - rho0) / (1.0 + rho0) };
    Ok(SineConstants { kappa0, rho0, floor, bound, vacuous })
}

pub fn sine_constants(cfg: &SineConfig) -> Result<SineConstants> {
    cfg.validate()?;
    sine_constants_raw(cfg.m, cfg.eta, cfg.mu, cfg.alpha)
}

/// Largest root of (μ/3 − 1)² − (1 + 4H)(μ/3 + 1).
pub fn sine_mu0(m: usize) -> Result<f64> {
    let h = harmonic(m)?;
    let b = 3.0 + 4.0 * h;
    let s = 0.5 * (b + (b * b + 16.0 * h).sqrt());
    Ok(3.0 * s)
}

/// Scans η over a geometric grid of (0, min(x₀, μ/2)) and returns the point
/// with the largest κ₀ − ρ₀, if any grid point is non-vacuous.
pub fn eta_scan(m: usize, mu: f64, n: usize) -> Result<Option<(f64, SineConstants)>> {
    if n < 2 {
        return Err(Error::InvalidParameter("scan needs at least two points"));
    }
    let cap = first_zero_of_phi().min(0.5 * mu) * (1.0 - 1e-9);
    let mut best: Option<(f64, SineConstants)> = None;
    for k in 0..n {
        let eta = cap * 10f64.powf(-8.0 + 8.0 * k as f64 / (n - 1) as f64);
        let c = sine_constants_raw(m, eta, mu, 1.0)?;
        if !c.vacuous && best.map_or(true, |(_, b)| c.kappa0 - c.rho0 > b.kappa0 - b.rho0) {
            best = Some((eta, c));
        }
    }
    Ok(best)
}

/// Random admissible configuration: ascending separated targets with gaps in
/// [δ, 1.5δ], pairing offsets uniform in [−ε, ε], |a_k| ≥ √α.
pub fn draw_admissible(m: usize, r: f64, eta: f64, mu: f64, alpha: f64, rng: &mut Rng) -> Result<(SineConfig, Amplitudes)> {
    check_params(m, r, eta, mu, alpha)?;
    let (eps, delta) = (eta / r, mu / r);
    let mut omega_star = Vec::with_capacity(m);
    let mut w = 0.0;
    for _ in 0..m {
        w += delta * (1.0 + 0.5 * rng.uniform());
        omega_star.push(w);
    }
    let omega = omega_star.iter().map(|ws| ws + eps * rng.range(-1.0, 1.0)).collect();
    let a = (0..m).map(|_| rng.sign() * (alpha.sqrt() + rng.uniform())).collect();
    let a_star = (0..m).map(|_| rng.sign() * rng.range(0.5, 1.5)).collect();
    let cfg = SineConfig { m, r, eta, mu, alpha, omega, omega_star };
    cfg.validate()?;
    Ok((cfg, Amplitudes { a, a_star }))
}

#[derive(Debug, Clone, Copy)]
pub struct SineRayleighReport {
    pub exact: f64,
    pub bound: f64,
    pub loss: f64,
}

impl SineRayleighReport {
    pub fn holds(&self) -> bool {
        self.exact >= self.bound
    }
}

fn residual(cfg: &SineConfig, amps: &Amplitudes, d: &DataDist) -> (Vec<f64>, Vec<f64>) {
    let model = SumOfSines { m: cfg.m };
    let theta = cfg.theta(&amps.a);
    let f = sample_outputs(&model, &theta, d);
    let fs = sample_outputs(&model, &cfg.theta_star(&amps.a_star), d);
    (theta, f.iter().zip(&fs).map(|(p, q)| p - q).collect())
}

/// Exact R(K̄; h, h) with h = F(a, ω) − F(a*, ω*) under U(−R, R), against the certificate.
pub fn sine_rayleigh_verify(cfg: &SineConfig, amps: &Amplitudes, nodes: usize) -> Result<SineRayleighReport> {
    let consts = sine_constants(cfg)?;
    if consts.vacuous {
        return Err(Error::Degenerate("vacuous certificate"));
    }
    if amps.a.len() != cfg.m || amps.a_star.len() != cfg.m {
        return Err(Error::DimensionMismatch { expected: cfg.m, got: amps.a.len() });
    }
    if amps.a.iter().any(|a| a * a < cfg.alpha) {
        return Err(Error::InvalidParameter("amplitude below the alpha floor"));
    }
    let d = DataDist::uniform_interval(cfg.r, nodes)?;
    let (theta, h) = residual(cfg, amps, &d);
    let loss = 0.5 * crate::domain::inner_values(&d, &h, &h, 1);
    if !(loss > 0.0) {
        return Err(Error::Degenerate("zero loss"));
    }
    let exact = ntk_rayleigh(&SumOfSines { m: cfg.m }, &theta, &h, &d)?;
    Ok(SineRayleighReport { exact, bound: consts.bound, loss })
}

#[derive(Debug, Clone, Copy)]
pub struct SweepReport {
    pub trials: usize,
    pub violations: usize,
    pub bound: f64,
    pub min_exact: f64,
}

/// Runs `sine_rayleigh_verify` on `trials` admissible draws; draw k uses the
/// stream `Rng::split(seed, k)`.
pub fn sine_rayleigh_sweep(m: usize, r: f64, eta: f64, mu: f64, alpha: f64, trials: usize, seed: u64) -> Result<SweepReport> {
    let mut rep = SweepReport { trials, violations: 0, bound: 0.0, min_exact: f64::INFINITY };
    for k in 0..trials {
        let mut rng = Rng::split(seed, k as u64);
        let (cfg, amps) = draw_admissible(m, r, eta, mu, alpha, &mut rng)?;
        let out = sine_rayleigh_verify(&cfg, &amps, DEFAULT_NODES)?;
        rep.bound = out.bound;
        rep.min_exact = rep.min_exact.min(out.exact);
        if !out.holds() {
            rep.violations += 1;
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LemmaReport {
    pub checked: usize,
    pub violations: usize,
    /// Smallest (bound − value) over all checks; negative means a violation.
    pub worst_margin: f64,
}

impl LemmaReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }

    fn record(&mut self, margin: f64) {
        if self.checked == 0 || margin < self.worst_margin {
            self.worst_margin = margin;
        }
        self.checked += 1;
        if margin < -SLACK {
            self.violations += 1;
        }
    }
}

/// Checks the closed-form Gram entries against the on- and off-block bounds,
/// at `samples` random frequency pairs per block plus the segment endpoints.
pub fn lemma_a8_check(cfg: &SineConfig, samples: usize, rng: &mut Rng) -> Result<LemmaReport> {
    cfg.validate()?;
    let (r, eps, delta) = (cfg.r, cfg.eps(), cfg.delta());
    let q = 1.0 / (2.0 * r * (delta - eps));
    let on_ee = 0.5 - q;
    let on_de = 0.5 * psi(r * eps) + q;
    let (on_dd_lo, on_dd_hi) = (0.5 * phi(r * eps) - q, 0.5 * phi(0.0) + q);
    let at = |i: usize, t: f64| (1.0 - t) * cfg.omega[i] + t * cfg.omega_star[i];
    let mut rep = LemmaReport::default();
    for i in 0..cfg.m {
        for j in 0..cfg.m {
            let off = if i == j {
                0.0
            } else {
                let gap = (i as f64 - j as f64).abs();
                0.5 / (r * (gap * delta - 2.0 * eps)) + 0.5 / (r * ((i + j + 2) as f64 * delta - 2.0 * eps))
            };
            for k in 0..samples + 4 {
                let (s, t) = match k {
                    0 => (0.0, 0.0),
                    1 => (0.0, 1.0),
                    2 => (1.0, 0.0),
                    3 => (1.0, 1.0),
                    _ => (rng.uniform(), rng.uniform()),
                };
                let (u, v) = (at(i, s), at(j, t));
                let (ee, de, dd) = sine_gram(u, v, r);
                if i == j {
                    let (uu, _, _) = sine_gram(u, u, r);
                    rep.record(uu - on_ee);
                    rep.record(on_de - de.abs() / r);
                    rep.record(dd / (r * r) - on_dd_lo);
                    rep.record(on_dd_hi - dd / (r * r));
                } else {
                    let (_, ed, _) = sine_gram(v, u, r);
                    let worst = ee.abs().max(de.abs() / r).max(ed.abs() / r).max(dd.abs() / (r * r));
                    rep.record(off - worst);
                }
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy)]
pub struct GershgorinReport {
    pub lam_cross: f64,
    pub gersh_cross: f64,
    pub lam_g: f64,
    pub gersh_g: f64,
    pub lam_a: f64,
    pub gersh_a: f64,
    /// min ‖dF·b‖²_D/‖b‖² over the basis.
    pub sing_sq: f64,
    /// min_k min(1, a_k²)·(φ(η) − 1/(μ − η)).
    pub sing_floor: f64,
    pub consts: SineConstants,
}

impl GershgorinReport {
    pub fn brackets_hold(&self) -> bool {
        let tol = 1e-9;
        self.gersh_cross <= self.lam_cross + tol && self.lam_g <= self.gersh_g + tol && self.lam_a <= self.gersh_a + tol
    }

    pub fn certificate_holds(&self) -> bool {
        let tol = 1e-9;
        self.gersh_cross >= self.consts.kappa0 - self.consts.rho0 - tol
            && self.gersh_g <= 1.0 + self.consts.rho0 + tol
            && self.sing_sq >= self.sing_floor - tol
    }

    pub fn holds(&self) -> bool {
        self.brackets_hold() && self.certificate_holds()
    }
}

/// Builds the basis (b, g) of the approximate-SVD argument at (a, ω) and
/// compares Gershgorin brackets with Jacobi eigenvalues and with κ₀, ρ₀.
pub fn gershgorin_chain(cfg: &SineConfig, amps: &Amplitudes, nodes: usize) -> Result<GershgorinReport> {
    let consts = sine_constants(cfg)?;
    let m = cfg.m;
    let model = SumOfSines { m };
    let d = DataDist::uniform_interval(cfg.r, nodes)?;
    let theta = cfg.theta(&amps.a);
    let mut b = Vec::with_capacity(2 * m);
    let mut g = Vec::with_capacity(2 * m);
    for k in 0..m {
        let mut v = alloc::vec![0.0; 2 * m];
        v[k] = 1.0;
        b.push(v);
        g.push(d.sample(|x| (cfg.omega[k] * x[0]).sin()));
    }
    for k in 0..m {
        if amps.a[k] == 0.0 || cfg.omega[k] == cfg.omega_star[k] {
            return Err(Error::Degenerate("basis direction vanishes"));
        }
        let mut v = alloc::vec![0.0; 2 * m];
        v[m + k] = (cfg.omega[k] - cfg.omega_star[k]) / amps.a[k];
        b.push(v);
        g.push(d.sample(|x| (cfg.omega[k] * x[0]).sin() - (cfg.omega_star[k] * x[0]).sin()));
    }
    let (cross, ma, mg, rho) = shattering_matrices(&model, &theta, &b, &g, &d)?;
    let min_alpha = amps.a.iter().map(|a| (a * a).min(1.0)).fold(1.0, f64::min);
    Ok(GershgorinReport {
        lam_cross: sym_eigen(&cross.sym_part())?.min(),
        gersh_cross: gershgorin_min(&cross)?,
        lam_g: sym_eigen(&mg)?.max(),
        gersh_g: gershgorin_max(mg.mat())?,
        lam_a: sym_eigen(&ma)?.max(),
        gersh_a: gershgorin_max(ma.mat())?,
        sing_sq: rho * rho,
        sing_floor: min_alpha * consts.floor,
        consts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limiting_constants() {
        let c = sine_constants_raw(3, 1e-9, 1e12, 0.7).unwrap();
        assert!((c.kappa0 - 1.0).abs() < 1e-9);
        assert!(c.rho0.abs() < 1e-8);
        assert!((c.bound - 0.7 / 3.0).abs() < 1e-8);
        let eta = 0.4;
        let mut prev = f64::INFINITY;
        for e in 2..=6 {
            let c = sine_constants_raw(2, eta, 10f64.powi(e), 1.0).unwrap();
            let gap = (c.kappa0 - phi(eta) / phi(0.0)).abs() + (c.rho0 - psi(eta) / phi(eta)).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn constants_match_subterm_rederivation() {
        // lemma-level bounds in (R, ε, δ) coordinates
        for &(m, eta, mu, r) in &[(1, 0.3, 50.0, 10.0), (2, 0.05, 40.0, 10.0), (5, 1.2, 300.0, 3.0), (1, 0.01, 20.0, 0.5)] {
            let (eps, delta) = (eta / r, mu / r);
            let h: f64 = (1..=m).map(|k| 1.0 / k as f64).sum();
            let q = 1.0 / (2.0 * r * (delta - eps));
            let dd_lo = 0.5 * phi(r * eps) - q;
            let dd_hi = 0.5 * phi(0.0) + q;
            let de = 0.5 * psi(r * eps) + q;
            let kappa = dd_lo / dd_hi;
            let rho = (2.0 * de + 4.0 * h / (r * (delta - 2.0 * eps))) / (2.0 * dd_lo);
            let c = sine_constants_raw(m, eta, mu, 1.0).unwrap();
            assert!((c.kappa0 - kappa).abs() <= 1e-12 * kappa.abs().max(1.0));
            assert!((c.rho0 - rho).abs() <= 1e-12 * rho.abs().max(1.0));
        }
    }

    #[test]
    fn vacuous_and_invalid() {
        let c = sine_constants_raw(1, 0.5, 5.0, 1.0).unwrap();
        assert!(c.vacuous);
        assert_eq!(c.bound, 0.0);
        assert!(sine_constants_raw(1, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn mu0_root() {
        let mu0 = sine_mu0(1).unwrap();
        assert!((mu0 - 1.5 * (7.0 + 65f64.sqrt())).abs() < 1e-12);
        for m in [1, 2, 7] {
            let mu0 = sine_mu0(m).unwrap();
            let h = harmonic(m).unwrap();
            let s = mu0 / 3.0;
            assert!(((s - 1.0).powi(2) - (1.0 + 4.0 * h) * (s + 1.0)).abs() < 1e-9 * mu0 * mu0);
            let below = sine_constants_raw(m, 0.0, 0.999 * mu0, 1.0).unwrap();
            assert!(below.kappa0 <= below.rho0);
            let above = sine_constants_raw(m, 0.0, 1.001 * mu0, 1.0).unwrap();
            assert!(above.kappa0 > above.rho0);
            for f in [1.01, 2.0] {
                let (eta, c) = eta_scan(m, f * mu0, 400).unwrap().expect("non-degenerate eta");
                assert!(eta > 0.0 && c.kappa0 > c.rho0);
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut rng = Rng::new(4);
        let (cfg, _) = draw_admissible(3, 10.0, 0.05, 40.0, 0.5, &mut rng).unwrap();
        let mut bad = cfg.clone();
        bad.omega[1] = bad.omega_star[1] + 0.01;
        assert!(bad.validate().is_err());
        let mut bad = cfg.clone();
        bad.omega_star.swap(0, 1);
        assert!(bad.validate().is_err());
        assert!(draw_admissible(2, 10.0, 2.5, 40.0, 1.0, &mut rng).is_err());
        assert!(draw_admissible(2, 10.0, 1.0, 2.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn lemma_bounds_on_draws() {
        let mut rng = Rng::new(88);
        for k in 0..100 {
            let (m, r, eta, mu) = if k % 2 == 0 { (2, 10.0, 0.05, 40.0) } else { (3, 5.0, 1.5, 25.0) };
            let (cfg, _) = draw_admissible(m, r, eta, mu, 1.0, &mut rng).unwrap();
            let rep = lemma_a8_check(&cfg, 20, &mut rng).unwrap();
            assert!(rep.holds(), "{rep:?} {cfg:?}");
        }
    }

    #[test]
    fn gershgorin_chain_on_draws() {
        let mut rng = Rng::new(5);
        for _ in 0..25 {
            let (cfg, amps) = draw_admissible(2, 10.0, 0.05, 40.0, 1.0, &mut rng).unwrap();
            let rep = gershgorin_chain(&cfg, &amps, DEFAULT_NODES).unwrap();
            assert!(rep.holds(), "{rep:?}");
            assert!((rep.lam_a - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rayleigh_certificate() {
        let mut rng = Rng::new(6);
        let (cfg, mut amps) = draw_admissible(2, 10.0, 0.05, 40.0, 1.0, &mut rng).unwrap();
        amps.a_star = amps.a.clone();
        let rep = sine_rayleigh_verify(&cfg, &amps, DEFAULT_NODES).unwrap();
        assert!(rep.holds() && rep.loss > 0.0);
        let sweep = sine_rayleigh_sweep(2, 10.0, 0.05, 40.0, 1.0, 10, 1).unwrap();
        assert_eq!(sweep.violations, 0);
        assert!(sweep.bound > 0.0);
    }
}
