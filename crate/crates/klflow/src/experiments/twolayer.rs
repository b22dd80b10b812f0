//! Teacher-student two-layer tanh networks in the KL region around a planted
//! initialization.

use super::{add_certificate, core_err, par_map, require, trajectory_table};
use crate::config::ExperimentConfig;
use crate::table::{dist_table, Table};
use anyhow::Result;
use klflow_core::bounds::{
    bassin_probability, bassin_radius, in_bassin, initial_loss_bound_check, planted_init, radius_loss_check, two_layer_bound,
    two_layer_kappa, two_layer_kl_at, two_layer_kl_verify, BoundCurve, InitialLossRow, KlReport, RadiusReport,
};
use klflow_core::domain::DataDist;
use klflow_core::flow::{integrate, FlowConfig, Instruments, Trajectory};
use klflow_core::linalg::{norm, sub};
use klflow_core::loss::Quadratic;
use klflow_core::model::{sample_outputs, NetworkMap, TwoLayerNet};
use klflow_core::rng::Rng;

pub const KEYS: &[&str] = &[
    "m",
    "m_star",
    "d",
    "n",
    "eps",
    "k",
    "samples",
    "step",
    "max_time",
    "record_every",
    "thin",
    "bassin_eta",
    "bassin_k",
    "bassin_widths",
    "bassin_trials",
    "init_widths",
    "init_trials",
];

pub struct TwoLayerRun {
    pub tables: Vec<Table>,
    pub kl: KlReport,
    /// KL margin at every flow record while L > ε.
    pub flow_min_margin: f64,
    pub radius: RadiusReport,
    pub bassin: Vec<(usize, f64)>,
    pub init_rows: Vec<InitialLossRow>,
    pub traj: Trajectory,
    pub curve: Option<BoundCurve>,
}

/// n uniform points of the unit ball in R^d, by rejection.
pub fn unit_ball(n: usize, dim: usize, rng: &mut Rng) -> Result<DataDist> {
    let mut pts = Vec::with_capacity(n * dim);
    while pts.len() < n * dim {
        let x: Vec<f64> = (0..dim).map(|_| rng.range(-1.0, 1.0)).collect();
        if norm(&x) <= 1.0 {
            pts.extend(x);
        }
    }
    DataDist::finite(dim, pts, None).map_err(core_err)
}

pub fn run(cfg: &ExperimentConfig) -> Result<TwoLayerRun> {
    let p = &cfg.params;
    p.reject_unknown(KEYS)?;
    let m: usize = p.get("m", 64)?;
    let m_star: usize = p.get("m_star", 4)?;
    let dim: usize = p.get("d", 2)?;
    let n: usize = p.get("n", 64)?;
    let eps: f64 = p.get("eps", 0.01)?;
    let k: usize = p.get("k", 4)?;
    let samples: usize = p.get("samples", 50)?;
    let step: f64 = p.get("step", 0.05)?;
    let max_time: f64 = p.get("max_time", 20.0)?;
    let record_every: usize = p.get("record_every", 1)?;
    let thin: usize = p.get("thin", 1)?;
    let beta: f64 = p.get("bassin_eta", 0.5)?;
    let bk: usize = p.get("bassin_k", 1)?;
    let widths: Vec<usize> = p.get_list("bassin_widths", &[16, 32, 64, 128, 256, 512, 1024])?;
    let btrials: usize = p.get("bassin_trials", 400)?;
    let iwidths: Vec<usize> = p.get_list("init_widths", &[4, 64, 1024])?;
    let itrials: usize = p.get("init_trials", 400)?;
    require(m >= 1 && m_star >= 1 && dim >= 1 && n >= 1, "m, m_star, d and n must be positive")?;
    require(k >= 1 && k * m_star <= m, "need 1 <= k and k * m_star <= m")?;
    require(eps > 0.0 && step > 0.0 && max_time >= 0.0, "eps and step must be positive")?;
    require(beta > 0.0 && bk >= 1 && btrials >= 100 && itrials >= 100, "bassin and init checks need >= 100 trials")?;

    let mut rng = Rng::new(cfg.seed);
    let teacher = TwoLayerNet { m: m_star, d: dim };
    let mut star = rng.normal_vec(m_star * dim, 1.0);
    star.extend((0..m_star).map(|_| rng.sign() * rng.range(0.5, 1.0)));
    let d = unit_ball(n, dim, &mut rng)?;
    let net = TwoLayerNet { m, d: dim };
    let eta = bassin_radius(eps, teacher.a(&star), TwoLayerNet::LIP, d.radius()).map_err(core_err)?;
    let theta0 = planted_init(&net, &teacher, &star, k, 0.5 * eta, &mut rng).map_err(core_err)?;
    let r_ball = 0.5 * eta * (k as f64).sqrt();
    let kl = two_layer_kl_verify(&net, &teacher, &star, eps, &theta0, r_ball, samples, &d, &mut rng).map_err(core_err)?;

    let target = sample_outputs(&teacher, &star, &d);
    let flow = FlowConfig::euler(step, max_time).record_every(record_every);
    let mut traj = integrate(&net, &Quadratic::full(target.clone()), &theta0, &d, &flow, Instruments { rayleigh: true, desing: None })
        .map_err(core_err)?;
    let radius = radius_loss_check(&traj, kl.c, eps);
    let l0 = traj.losses[0];
    let curve = if l0 > eps {
        let c = two_layer_bound(l0, eps, two_layer_kappa(kl.c, l0 - eps)).map_err(core_err)?;
        traj.attach_bound(&c);
        Some(c)
    } else {
        None
    };
    let path = traj.path_lengths();
    let mut margins = Vec::with_capacity(traj.len());
    let mut bassin_col = Vec::with_capacity(traj.len());
    let mut flow_min_margin = f64::INFINITY;
    for (i, th) in traj.params.iter().enumerate() {
        let pt = two_layer_kl_at(&net, &teacher, &star, th, &theta0, eps, kl.c, &d);
        margins.push(pt.margin());
        if traj.losses[i] > eps {
            flow_min_margin = flow_min_margin.min(pt.margin());
        }
        bassin_col.push(if in_bassin(&net, th, &teacher, &star, eta) { 1.0 } else { 0.0 });
    }
    let dist: Vec<f64> = traj.params.iter().map(|t| norm(&sub(t, &theta0))).collect();
    let mut tt = trajectory_table(
        "twolayer_trajectory",
        &traj,
        &[("kl_margin", margins), ("distance", dist), ("path_length", path), ("in_bassin", bassin_col)],
        thin,
    );
    tt.comment("seed", cfg.seed);
    for (key, v) in [("eps", eps), ("eta", eta), ("r_ball", r_ball), ("c", kl.c), ("c_empirical", kl.c_empirical)] {
        tt.comment_f64(key, v);
    }
    tt.comment_f64("radius_worst", radius.worst);
    if let Some(c) = &curve {
        add_certificate(&mut tt, c);
    }

    let mut kt = Table::new("twolayer_kl", ["samples", "attempts", "eta", "c", "c_empirical", "residual_max", "sqrt_eps", "min_margin", "violations"]);
    kt.push(vec![
        kl.samples as f64,
        kl.attempts as f64,
        kl.eta,
        kl.c,
        kl.c_empirical,
        kl.residual_max,
        kl.sqrt_eps,
        kl.min_margin,
        kl.violations as f64,
    ]);

    let probs = par_map(cfg.jobs, widths.len(), |i| bassin_probability(&teacher, &star, widths[i], beta, bk, btrials, cfg.seed ^ (i as u64 + 1)))?;
    let mut bt = Table::new("twolayer_bassin", ["m", "probability"]);
    bt.comment_f64("eta", beta);
    bt.comment("k", bk);
    bt.comment("trials", btrials);
    let mut bassin = Vec::with_capacity(widths.len());
    for (w, pr) in widths.iter().zip(probs) {
        let pr = pr.map_err(core_err)?;
        bt.push(vec![*w as f64, pr]);
        bassin.push((*w, pr));
    }

    let init_rows = initial_loss_bound_check(&iwidths, &d, itrials, cfg.seed).map_err(core_err)?;
    let mut it = Table::new("twolayer_initial_loss", ["m", "mean", "bound", "limit"]);
    it.comment("trials", itrials);
    for r in &init_rows {
        it.push(vec![r.m as f64, r.mean, r.bound, r.limit]);
    }

    let mut data = dist_table("twolayer_data", &d, &[("target", target)]);
    data.comment("teacher", star.iter().map(|v| crate::table::fmt_value(*v)).collect::<Vec<_>>().join(" "));
    data.comment("param_dim", net.param_dim());
    Ok(TwoLayerRun { tables: vec![tt, kt, bt, it, data], kl, flow_min_margin, radius, bassin, init_rows, traj, curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Case;

    fn small() -> ExperimentConfig {
        ExperimentConfig::new(Case::TwoLayer)
            .with("m", 16)
            .with("n", 24)
            .with("samples", 5)
            .with("max_time", 2.0)
            .with("bassin_widths", "8,64")
            .with("bassin_trials", 100)
            .with("init_widths", "4")
            .with("init_trials", 100)
    }

    #[test]
    fn small_run_holds() {
        let r = run(&small()).unwrap();
        assert!(r.kl.holds(), "{:?}", r.kl);
        assert!(r.radius.holds(), "{:?}", r.radius);
        assert!(r.bassin[0].1 <= r.bassin[1].1);
        assert!(r.init_rows[0].holds());
        assert_eq!(r.tables.len(), 5);
    }

    #[test]
    fn ball_points() {
        let d = unit_ball(50, 3, &mut Rng::new(4)).unwrap();
        assert_eq!(d.len(), 50);
        assert!(d.radius() <= 1.0);
    }

    #[test]
    fn validation() {
        assert!(run(&small().with("k", 5)).is_err());
        assert!(run(&small().with("bassin_trials", 10)).is_err());
        assert!(run(&small().with("eps", 0)).is_err());
    }
}
