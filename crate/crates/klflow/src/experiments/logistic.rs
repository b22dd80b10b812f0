//! Softmax regression on separable data: the Lambert-W bound against
//! gradient descent.

use super::{add_certificate, core_err, require, trajectory_table};
use crate::config::ExperimentConfig;
use crate::table::{dist_table, Table};
use anyhow::{bail, ensure, Result};
use klflow_core::bounds::{last_decade_spread, logistic_bound, logistic_tail_check, BoundCurve, TailReport};
use klflow_core::domain::DataDist;
use klflow_core::flow::{integrate, FlowConfig, Instruments, Trajectory};
use klflow_core::linalg::dot;
use klflow_core::loss::{CrossEntropy, LogisticDesing};
use klflow_core::model::{separation_margin, LinearLogits};
use klflow_core::rng::Rng;

pub const KEYS: &[&str] = &[
    "preset",
    "n",
    "d",
    "c",
    "scale",
    "noise",
    "step",
    "max_time",
    "record_every",
    "thin",
    "tail_decades",
    "tail_points",
    "grid_points",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// x_i = s·e_i + noise, labelled i, separated by ζ = identity rows.
    Tight,
    /// Gaussian samples labelled by argmax_k ⟨ζ_k, x⟩ for a Gaussian ζ.
    Random,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Tight => "tight",
            Preset::Random => "random",
        }
    }
}

pub struct Dataset {
    pub d: DataDist,
    pub labels: Vec<usize>,
    pub zeta: Vec<f64>,
    pub theta0: Vec<f64>,
    pub c: usize,
}

pub struct LogisticRun {
    pub tables: Vec<Table>,
    pub preset: Preset,
    pub traj: Trajectory,
    pub curve: BoundCurve,
    pub eps: f64,
    pub kappa: f64,
    pub tail: TailReport,
    /// max/min of t·bound(t) over the last decade of the bound grid.
    pub spread: f64,
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = k;
        }
    }
    best
}

pub fn dataset(preset: Preset, n: usize, dim: usize, c: usize, scale: f64, noise: f64, rng: &mut Rng) -> Result<Dataset> {
    let (pts, labels, zeta, theta0) = match preset {
        Preset::Tight => {
            ensure!(n <= c && c <= dim, "tight preset needs n <= c <= d");
            let mut pts = rng.normal_vec(n * dim, noise);
            for i in 0..n {
                pts[i * dim + i] += scale;
            }
            let zeta = (0..c * dim).map(|k| if k / dim == k % dim { 1.0 } else { 0.0 }).collect();
            (pts, (0..n).collect::<Vec<_>>(), zeta, vec![0.0; c * dim])
        }
        Preset::Random => {
            let pts = rng.normal_vec(n * dim, 1.0);
            let zeta = rng.normal_vec(c * dim, 1.0);
            let labels = (0..n)
                .map(|i| {
                    let x = &pts[i * dim..(i + 1) * dim];
                    let scores: Vec<f64> = (0..c).map(|k| dot(&zeta[k * dim..(k + 1) * dim], x)).collect();
                    argmax(&scores)
                })
                .collect();
            let theta0 = rng.normal_vec(c * dim, 1.0);
            (pts, labels, zeta, theta0)
        }
    };
    let d = DataDist::finite(dim, pts, None).map_err(core_err)?;
    Ok(Dataset { d, labels, zeta, theta0, c })
}

pub fn run(cfg: &ExperimentConfig) -> Result<LogisticRun> {
    let p = &cfg.params;
    p.reject_unknown(KEYS)?;
    let preset = match p.get_str("preset").unwrap_or("tight") {
        "tight" => Preset::Tight,
        "random" => Preset::Random,
        other => bail!("preset must be `tight` or `random`, got `{other}`"),
    };
    let (n0, d0, c0) = match preset {
        Preset::Tight => (3, 4, 3),
        Preset::Random => (100, 5, 4),
    };
    let n: usize = p.get("n", n0)?;
    let dim: usize = p.get("d", d0)?;
    let c: usize = p.get("c", c0)?;
    let scale: f64 = p.get("scale", 2.0)?;
    let noise: f64 = p.get("noise", 0.05)?;
    let step: f64 = p.get("step", 0.1)?;
    let max_time: f64 = p.get("max_time", 200.0)?;
    let record_every: usize = p.get("record_every", 1)?;
    let thin: usize = p.get("thin", 10)?;
    let decades: f64 = p.get("tail_decades", 3.0)?;
    let tail_points: usize = p.get("tail_points", 400)?;
    let grid_points: usize = p.get("grid_points", 600)?;
    require(n >= 1 && dim >= 1 && c >= 2, "need n >= 1, d >= 1 and c >= 2")?;
    require(scale > 0.0 && noise >= 0.0, "scale must be positive and noise non-negative")?;
    require(step > 0.0 && max_time >= 0.0, "step must be positive and max_time non-negative")?;
    require(decades > 0.0 && tail_points >= 2 && grid_points >= 10, "bad tail grid")?;

    let mut rng = Rng::new(cfg.seed);
    let ds = dataset(preset, n, dim, c, scale, noise, &mut rng)?;
    let eps = separation_margin(&ds.zeta, c, &ds.d, &ds.labels).map_err(core_err)?;
    ensure!(eps > 0.0, "drawn dataset is not separated by its generating ray (margin {eps:e})");
    let kappa = 1.0 / n as f64;

    let model = LinearLogits { c, d: dim };
    let loss = CrossEntropy::dirac(c, &ds.labels).map_err(core_err)?;
    let flow = FlowConfig::euler(step, max_time).record_every(record_every);
    let inst = Instruments { rayleigh: true, desing: Some(&LogisticDesing) };
    let mut traj = integrate(&model, &loss, &ds.theta0, &ds.d, &flow, inst).map_err(core_err)?;
    let curve = logistic_bound(eps, kappa, traj.losses[0]).map_err(core_err)?;
    traj.attach_bound(&curve);

    let tail = logistic_tail_check(&curve, decades, tail_points).map_err(core_err)?;
    let spread = last_decade_spread(&curve, tail.t_end, 200);

    let name = preset.name();
    let mut tt = trajectory_table(&format!("logistic_{name}_trajectory"), &traj, &[], thin);
    tt.comment("preset", name);
    tt.comment("seed", cfg.seed);
    tt.comment_f64("step", step);
    add_certificate(&mut tt, &curve);

    let tau = 1.0 / (eps * eps * kappa * kappa);
    let mut bt = Table::new(format!("logistic_{name}_bound"), ["t", "bound", "t_bound_over_tau"]);
    add_certificate(&mut bt, &curve);
    bt.comment_f64("knee", tail.knee);
    bt.comment_f64("tail_worst", tail.worst);
    bt.comment("tail_violations", tail.violations);
    bt.comment_f64("last_decade_spread", spread);
    bt.push(vec![0.0, curve.eval(0.0), 0.0]);
    let t_lo = tau * 1e-3;
    for k in 0..grid_points {
        let t = t_lo * (tail.t_end / t_lo).powf(k as f64 / (grid_points - 1) as f64);
        let b = curve.eval(t);
        bt.push(vec![t, b, t * b / tau]);
    }

    let labels: Vec<f64> = ds.labels.iter().map(|&l| l as f64).collect();
    let mut data = dist_table(&format!("logistic_{name}_data"), &ds.d, &[("label", labels)]);
    data.comment("classes", c);
    data.comment_f64("margin", eps);
    Ok(LogisticRun { tables: vec![tt, bt, data], preset, traj, curve, eps, kappa, tail, spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Case;
    use crate::table::finite_dist;

    #[test]
    fn tight_preset_constants() {
        let r = run(&ExperimentConfig::new(Case::Logistic).with("max_time", 5.0)).unwrap();
        assert_eq!(r.kappa, 1.0 / 3.0);
        assert!(r.eps > 1.0, "{}", r.eps);
        assert!((r.curve.eval(0.0) - r.traj.losses[0]).abs() < 1e-9);
        assert!(r.traj.bound_dominates());
        assert!(r.tail.holds());
    }

    #[test]
    fn random_preset_is_separable() {
        for seed in 0..5 {
            let mut rng = Rng::new(seed);
            let ds = dataset(Preset::Random, 100, 5, 4, 2.0, 0.05, &mut rng).unwrap();
            assert!(separation_margin(&ds.zeta, 4, &ds.d, &ds.labels).unwrap() > 0.0);
        }
    }

    #[test]
    fn data_table_reloads() {
        let r = run(&ExperimentConfig::new(Case::Logistic).with("max_time", 0.5)).unwrap();
        let back = finite_dist(&Table::parse("d", &r.tables[2].to_bytes()).unwrap()).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back.dim(), 4);
    }

    #[test]
    fn validation() {
        assert!(run(&ExperimentConfig::new(Case::Logistic).with("preset", "tight").with("n", 5)).is_err());
        assert!(run(&ExperimentConfig::new(Case::Logistic).with("c", 1)).is_err());
        assert!(run(&ExperimentConfig::new(Case::Logistic).with("preset", "wide")).is_err());
    }
}
