//! Linear regression under the quadratic loss: exponential decay at rate 4λ⁺
//! where λ⁺ is the smallest positive eigenvalue of E[xxᵀ].

use super::{add_certificate, core_err, integrator_name, parse_integrator, require, trajectory_table};
use crate::config::ExperimentConfig;
use crate::table::{dist_table, Table};
use anyhow::Result;
use klflow_core::bounds::{linear_exp_bound, BoundCurve};
use klflow_core::domain::DataDist;
use klflow_core::flow::{integrate, FlowConfig, Instruments, Trajectory};
use klflow_core::linalg::{lambda_min_plus, Mat, SymMat};
use klflow_core::loss::{LogDesing, Quadratic};
use klflow_core::model::{sample_outputs, LinearModel};
use klflow_core::rng::Rng;

pub const KEYS: &[&str] = &["preset", "d", "n", "step", "max_time", "integrator", "record_every", "thin"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// x_i = √d e_i, so E[xxᵀ] = I.
    Identity,
    /// n draws of N(0, I_d).
    Random,
}

pub struct LinearRun {
    pub tables: Vec<Table>,
    pub traj: Trajectory,
    pub curve: BoundCurve,
    pub lam_plus: f64,
}

/// E[xxᵀ] of a finite distribution.
pub fn second_moment(d: &DataDist) -> Result<SymMat> {
    let k = d.dim();
    Ok(Mat::from_fn(k, |i, j| (0..d.len()).map(|s| d.weight(s) * d.point(s)[i] * d.point(s)[j]).sum()).sym_part())
}

pub fn run(cfg: &ExperimentConfig) -> Result<LinearRun> {
    let p = &cfg.params;
    p.reject_unknown(KEYS)?;
    let preset = match p.get_str("preset").unwrap_or("random") {
        "identity" => Preset::Identity,
        "random" => Preset::Random,
        other => anyhow::bail!("preset must be `identity` or `random`, got `{other}`"),
    };
    let dim: usize = p.get("d", 5)?;
    let n: usize = p.get("n", if preset == Preset::Identity { dim } else { 8 })?;
    let step: f64 = p.get("step", 1e-3)?;
    let max_time: f64 = p.get("max_time", 2.0)?;
    let integrator = parse_integrator(p.get_str("integrator").unwrap_or("rk4"))?;
    let record_every: usize = p.get("record_every", 10)?;
    let thin: usize = p.get("thin", 1)?;
    require(dim >= 1 && n >= 1, "d and n must be positive")?;
    require(preset != Preset::Identity || n == dim, "identity preset needs n = d")?;
    require(step > 0.0 && max_time >= 0.0, "step must be positive and max_time non-negative")?;

    let mut rng = Rng::new(cfg.seed);
    let pts = match preset {
        Preset::Identity => {
            let s = (dim as f64).sqrt();
            (0..n * dim).map(|k| if k / dim == k % dim { s } else { 0.0 }).collect()
        }
        Preset::Random => rng.normal_vec(n * dim, 1.0),
    };
    let d = DataDist::finite(dim, pts, None).map_err(core_err)?;
    let model = LinearModel { d: dim };
    let theta_star = rng.normal_vec(dim, 1.0);
    let target = sample_outputs(&model, &theta_star, &d);
    let loss = Quadratic::full(target.clone());
    let theta0 = vec![0.0; dim];

    let a = second_moment(&d)?;
    let lam_plus = lambda_min_plus(&a, 1e-10).map_err(core_err)?;
    let flow = FlowConfig { integrator, ..FlowConfig::euler(step, max_time) }.record_every(record_every);
    let inst = Instruments { rayleigh: true, desing: Some(&LogDesing) };
    let mut traj = integrate(&model, &loss, &theta0, &d, &flow, inst).map_err(core_err)?;
    let curve = linear_exp_bound(traj.losses[0], lam_plus).map_err(core_err)?;
    traj.attach_bound(&curve);

    let mut tt = trajectory_table("linear_trajectory", &traj, &[], thin);
    tt.comment("preset", if preset == Preset::Identity { "identity" } else { "random" });
    tt.comment("seed", cfg.seed);
    tt.comment("integrator", integrator_name(integrator));
    tt.comment_f64("step", step);
    add_certificate(&mut tt, &curve);
    let mut data = dist_table("linear_data", &d, &[("target", target)]);
    data.comment("theta_star", theta_star.iter().map(|v| crate::table::fmt_value(*v)).collect::<Vec<_>>().join(" "));
    Ok(LinearRun { tables: vec![tt, data], traj, curve, lam_plus })
}
