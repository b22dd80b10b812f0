//! Recovery of a sum of sines from its samples on [−R, R], with the
//! paired/separated Rayleigh certificate.

use super::{add_certificate, core_err, par_map, require, trajectory_table};
use crate::config::ExperimentConfig;
use crate::table::Table;
use anyhow::Result;
use klflow_core::bounds::{
    draw_admissible, eta_scan, halved_quadratic_bound, sine_constants, sine_constants_raw, sine_mu0, sine_rayleigh_verify,
    Amplitudes, SineConfig, SineConstants, SineRayleighReport,
};
use klflow_core::domain::DataDist;
use klflow_core::flow::{integrate, FlowConfig, Instruments, Trajectory};
use klflow_core::loss::{LogDesing, Quadratic};
use klflow_core::model::{sample_outputs, SumOfSines};
use klflow_core::rng::Rng;
use klflow_core::specfun::first_zero_of_phi;

pub const KEYS: &[&str] = &[
    "m",
    "r",
    "mu",
    "eta",
    "alpha",
    "trials",
    "nodes",
    "step",
    "max_time",
    "record_every",
    "thin",
    "grid_mu_factors",
    "grid_eta_points",
    "scan_points",
];

pub struct SinesRun {
    pub tables: Vec<Table>,
    pub reports: Vec<SineRayleighReport>,
    pub violations: usize,
    pub constants: SineConstants,
    pub mu0: f64,
    /// Best grid point of the η-scan at μ = 2μ₀, if any is non-vacuous.
    pub scan_at_2mu0: Option<(f64, SineConstants)>,
    pub traj: Trajectory,
}

/// Whether (a, ω) is still in the certified regime of `base`.
fn admissible(base: &SineConfig, theta: &[f64]) -> bool {
    let (a, w) = theta.split_at(base.m);
    let cfg = SineConfig { omega: w.to_vec(), ..base.clone() };
    cfg.validate().is_ok() && a.iter().all(|x| x * x >= base.alpha)
}

fn draw(m: usize, r: f64, eta: f64, mu: f64, alpha: f64, seed: u64, k: usize) -> Result<(SineConfig, Amplitudes)> {
    let mut rng = Rng::split(seed, k as u64);
    draw_admissible(m, r, eta, mu, alpha, &mut rng).map_err(core_err)
}

fn const_row(m: usize, mu0: f64, mu: f64, eta: f64, c: &SineConstants, best: bool) -> Vec<f64> {
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    vec![m as f64, mu0, mu, mu / mu0, eta, c.kappa0, c.rho0, c.floor, c.bound, flag(c.vacuous), flag(best)]
}

pub fn run(cfg: &ExperimentConfig) -> Result<SinesRun> {
    let p = &cfg.params;
    p.reject_unknown(KEYS)?;
    let m: usize = p.get("m", 2)?;
    let r: f64 = p.get("r", 10.0)?;
    let mu: f64 = p.get("mu", 40.0)?;
    let eta: f64 = p.get("eta", 0.05)?;
    let alpha: f64 = p.get("alpha", 1.0)?;
    let trials: usize = p.get("trials", 100)?;
    let nodes: usize = p.get("nodes", 512)?;
    let step: f64 = p.get("step", 1e-3)?;
    let max_time: f64 = p.get("max_time", 20.0)?;
    let record_every: usize = p.get("record_every", 10)?;
    let thin: usize = p.get("thin", 1)?;
    let factors: Vec<f64> = p.get_list("grid_mu_factors", &[1.0, 1.5, 2.0, 3.0, 5.0])?;
    let eta_points: usize = p.get("grid_eta_points", 9)?;
    let scan_points: usize = p.get("scan_points", 400)?;
    require(m >= 1 && trials >= 1 && nodes >= 2, "m, trials and nodes must be positive")?;
    require(eta_points >= 2 && scan_points >= 2, "grids need at least two points")?;
    require(factors.iter().all(|f| *f > 0.0), "grid_mu_factors must be positive")?;
    let constants = sine_constants_raw(m, eta, mu, alpha).map_err(core_err)?;
    require(!constants.vacuous, "certificate is vacuous at (m, eta, mu); raise mu or lower eta")?;

    // Rayleigh quotient against the certificate on independent draws.
    let outs = par_map(cfg.jobs, trials, |k| -> Result<(SineConfig, Amplitudes, SineRayleighReport)> {
        let (c, a) = draw(m, r, eta, mu, alpha, cfg.seed, k)?;
        let rep = sine_rayleigh_verify(&c, &a, nodes).map_err(core_err)?;
        Ok((c, a, rep))
    })?;
    let mut header = vec!["trial".to_string(), "exact".into(), "bound".into(), "loss".into(), "holds".into()];
    for name in ["omega", "omega_star", "a", "a_star"] {
        header.extend((0..m).map(|i| format!("{name}_{i}")));
    }
    let mut rt = Table::new("sines_rayleigh", header);
    rt.comment("seed", cfg.seed);
    rt.comment("nodes", nodes);
    let mut reports = Vec::with_capacity(trials);
    for (k, o) in outs.into_iter().enumerate() {
        let (c, a, rep) = o?;
        let mut row = vec![k as f64, rep.exact, rep.bound, rep.loss, if rep.holds() { 1.0 } else { 0.0 }];
        for v in [&c.omega, &c.omega_star, &a.a, &a.a_star] {
            row.extend_from_slice(v);
        }
        rt.push(row);
        reports.push(rep);
    }
    let violations = reports.iter().filter(|r| !r.holds()).count();
    rt.comment("violations", violations);

    // Certificate constants over a (μ, η) grid, with the best η per μ.
    let mu0 = sine_mu0(m).map_err(core_err)?;
    let mut ct = Table::new(
        "sines_certificate",
        ["m", "mu0", "mu", "mu_over_mu0", "eta", "kappa0", "rho0", "floor", "bound", "vacuous", "scan_best"],
    );
    ct.comment_f64("x0", first_zero_of_phi());
    let mut scan_at_2mu0 = None;
    for &f in &factors {
        let mu_g = f * mu0;
        let cap = first_zero_of_phi().min(0.5 * mu_g) * (1.0 - 1e-9);
        for k in 0..eta_points {
            let e = cap * 10f64.powf(-4.0 + 4.0 * k as f64 / (eta_points - 1) as f64);
            let c = sine_constants_raw(m, e, mu_g, 1.0).map_err(core_err)?;
            ct.push(const_row(m, mu0, mu_g, e, &c, false));
        }
        let best = eta_scan(m, mu_g, scan_points).map_err(core_err)?;
        if let Some((e, c)) = best {
            ct.push(const_row(m, mu0, mu_g, e, &c, true));
        }
        if f == 2.0 {
            scan_at_2mu0 = best;
        }
    }
    if !factors.contains(&2.0) {
        scan_at_2mu0 = eta_scan(m, 2.0 * mu0, scan_points).map_err(core_err)?;
    }

    // One flow from the first admissible draw; its bound holds while the
    // iterate stays admissible, recorded in the `admissible` column.
    let (c0, a0) = draw(m, r, eta, mu, alpha, cfg.seed, 0)?;
    let d = DataDist::uniform_interval(r, nodes).map_err(core_err)?;
    let model = SumOfSines { m };
    let target = sample_outputs(&model, &c0.theta_star(&a0.a_star), &d);
    let flow = FlowConfig::euler(step, max_time).record_every(record_every);
    let inst = Instruments { rayleigh: true, desing: Some(&LogDesing) };
    let mut traj = integrate(&model, &Quadratic::half(target), &c0.theta(&a0.a), &d, &flow, inst).map_err(core_err)?;
    let b0 = sine_constants(&c0).map_err(core_err)?;
    let curve = halved_quadratic_bound(traj.losses[0], b0.bound).map_err(core_err)?;
    traj.attach_bound(&curve);
    let adm: Vec<f64> = traj.params.iter().map(|t| if admissible(&c0, t) { 1.0 } else { 0.0 }).collect();
    let mut tt = trajectory_table("sines_trajectory", &traj, &[("admissible", adm)], thin);
    tt.comment("seed", cfg.seed);
    for (k, v) in [("m", m as f64), ("r", r), ("mu", mu), ("eta", eta), ("alpha", alpha), ("kappa0", b0.kappa0), ("rho0", b0.rho0)] {
        tt.comment_f64(k, v);
    }
    add_certificate(&mut tt, &curve);
    Ok(SinesRun { tables: vec![tt, rt, ct], reports, violations, constants, mu0, scan_at_2mu0, traj })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Case;

    fn small() -> ExperimentConfig {
        ExperimentConfig::new(Case::Sines).with("trials", 5).with("max_time", 0.5).with("nodes", 256)
    }

    #[test]
    fn small_sweep_holds() {
        let r = run(&small()).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.scan_at_2mu0.is_some());
        assert!(r.traj.losses.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn jobs_do_not_change_output() {
        let a = run(&small()).unwrap();
        let mut c = small();
        c.jobs = 3;
        let b = run(&c).unwrap();
        for (x, y) in a.tables.iter().zip(&b.tables) {
            assert_eq!(x.to_bytes(), y.to_bytes());
        }
    }

    #[test]
    fn admissibility_tracks_pairing() {
        let mut rng = Rng::new(1);
        let (c, a) = draw_admissible(2, 10.0, 0.05, 40.0, 1.0, &mut rng).unwrap();
        let mut t = c.theta(&a.a);
        assert!(admissible(&c, &t));
        t[2] += 1.0;
        assert!(!admissible(&c, &t));
    }

    #[test]
    fn vacuous_configuration_rejected() {
        assert!(run(&small().with("mu", 5.0).with("eta", 1.0)).is_err());
    }
}
