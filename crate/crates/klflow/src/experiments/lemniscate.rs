//! Two parameterizations of the lemniscate fitted to a single linear
//! measurement: same functional minimum, different speeds.

use super::{add_certificate, core_err, require, trajectory_table};
use crate::config::ExperimentConfig;
use crate::table::Table;
use anyhow::{anyhow, Result};
use klflow_core::bounds::{lemniscate_bound, BoundCurve};
use klflow_core::domain::DataDist;
use klflow_core::flow::{integrate, limit_param, FlowConfig, Instruments, Trajectory};
use klflow_core::loss::{LogDesing, Quadratic};
use klflow_core::model::{lambda_sv, lemniscate_eval, mu_s, Lemniscate, Variant};

pub const KEYS: &[&str] = &["u", "v", "y", "theta0", "step", "max_time", "stop_loss", "thin", "sweep_points"];

/// λ_S is bounded below by ½ along the sphere trajectory.
pub const LAMBDA_S_STAR: f64 = 0.5;

pub struct FlowResult {
    pub variant: Variant,
    pub traj: Trajectory,
    pub theta_star: f64,
    /// F(θ*) as the point (a, b).
    pub f_star: (f64, f64),
    /// Smallest cosine between tangent and −∇ℓ over every record.
    pub mu0: f64,
    /// ‖∇F(θ*)‖².
    pub lambda_star: f64,
    pub curve: BoundCurve,
}

pub struct LemniscateRun {
    pub tables: Vec<Table>,
    pub sphere: FlowResult,
    pub line: FlowResult,
    /// ‖F_S(θ_S*) − F_L(θ_L*)‖₂.
    pub functional_gap: f64,
}

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Sphere => "sphere",
        Variant::Line => "line",
    }
}

struct Setup {
    u: f64,
    v: f64,
    y: f64,
}

impl Setup {
    fn residual(&self, t: f64, var: Variant) -> f64 {
        let (a, b) = lemniscate_eval(var, t);
        self.u * a + self.v * b - self.y
    }

    /// ∇ℓ at (a, b) for ℓ(a, b) = (ua + vb − y)².
    fn loss_grad(&self, t: f64, var: Variant) -> (f64, f64) {
        let r = self.residual(t, var);
        (2.0 * r * self.u, 2.0 * r * self.v)
    }
}

fn run_variant(s: &Setup, var: Variant, theta0: f64, flow: &FlowConfig, d: &DataDist) -> Result<FlowResult> {
    let model = Lemniscate(var);
    let loss = Quadratic::full(vec![s.y]);
    let inst = Instruments { rayleigh: true, desing: Some(&LogDesing) };
    let mut traj = integrate(&model, &loss, &[theta0], d, flow, inst).map_err(core_err)?;
    let theta_star = limit_param(&traj).map_err(|e| anyhow!("{} flow: {e}", variant_name(var)))?[0];
    let mut mu0 = f64::INFINITY;
    for p in &traj.params {
        mu0 = mu0.min(mu_s(var, p[0], s.loss_grad(p[0], var)).map_err(core_err)?);
    }
    let lambda_star = lambda_sv(var, theta_star);
    let lam = match var {
        Variant::Sphere => LAMBDA_S_STAR,
        Variant::Line => lambda_star,
    };
    let curve = lemniscate_bound(traj.losses[0], mu0, lam).map_err(core_err)?;
    traj.attach_bound(&curve);
    Ok(FlowResult { variant: var, f_star: lemniscate_eval(var, theta_star), traj, theta_star, mu0, lambda_star, curve })
}

fn flow_table(s: &Setup, r: &FlowResult, thin: usize) -> Result<Table> {
    let var = r.variant;
    let ps: Vec<f64> = r.traj.params.iter().map(|p| p[0]).collect();
    let mu: Vec<f64> = ps.iter().map(|&t| mu_s(var, t, s.loss_grad(t, var)).unwrap_or(f64::NAN)).collect();
    let lam: Vec<f64> = ps.iter().map(|&t| lambda_sv(var, t)).collect();
    let ab: Vec<(f64, f64)> = ps.iter().map(|&t| lemniscate_eval(var, t)).collect();
    let extra = [
        ("mu", mu),
        ("lambda", lam),
        ("a", ab.iter().map(|p| p.0).collect()),
        ("b", ab.iter().map(|p| p.1).collect()),
    ];
    let mut t = trajectory_table(&format!("lemniscate_{}_trajectory", variant_name(var)), &r.traj, &extra, thin);
    t.comment("variant", variant_name(var));
    t.comment_f64("theta_star", r.theta_star);
    t.comment_f64("lambda_at_limit", r.lambda_star);
    add_certificate(&mut t, &r.curve);
    Ok(t)
}

fn sweep_table(s: &Setup, r: &FlowResult, theta0: f64, points: usize) -> Table {
    let var = r.variant;
    let mut t = Table::new(format!("lemniscate_{}_sweep", variant_name(var)), ["theta", "a", "b", "loss", "mu", "lambda"]);
    t.comment("variant", variant_name(var));
    for k in 0..points {
        let th = theta0 + (r.theta_star - theta0) * k as f64 / (points - 1) as f64;
        let (a, b) = lemniscate_eval(var, th);
        let res = s.residual(th, var);
        let mu = mu_s(var, th, s.loss_grad(th, var)).unwrap_or(f64::NAN);
        t.push(vec![th, a, b, res * res, mu, lambda_sv(var, th)]);
    }
    t
}

pub fn run(cfg: &ExperimentConfig) -> Result<LemniscateRun> {
    let p = &cfg.params;
    p.reject_unknown(KEYS)?;
    let s = Setup { u: p.get("u", 4.0)?, v: p.get("v", -1.0)?, y: p.get("y", -3.0)? };
    let theta0: f64 = p.get("theta0", 0.0)?;
    let step: f64 = p.get("step", 1e-3)?;
    let max_time: f64 = p.get("max_time", 1000.0)?;
    let stop_loss: f64 = p.get("stop_loss", 1e-14)?;
    let thin: usize = p.get("thin", 100)?;
    let points: usize = p.get("sweep_points", 401)?;
    require(s.u.is_finite() && s.v.is_finite() && s.y.is_finite(), "u, v, y must be finite")?;
    require(s.u != 0.0 || s.v != 0.0, "(u, v) must be nonzero")?;
    require(step > 0.0 && max_time > 0.0 && stop_loss > 0.0, "step, max_time and stop_loss must be positive")?;
    require(points >= 2, "sweep_points must be at least 2")?;

    let d = DataDist::finite(2, vec![s.u, s.v], None).map_err(core_err)?;
    let flow = FlowConfig::euler(step, max_time).stop_loss(stop_loss);
    let sphere = run_variant(&s, Variant::Sphere, theta0, &flow, &d)?;
    let line = run_variant(&s, Variant::Line, theta0, &flow, &d)?;
    let functional_gap = (sphere.f_star.0 - line.f_star.0).hypot(sphere.f_star.1 - line.f_star.1);

    let mut tables = Vec::new();
    for r in [&sphere, &line] {
        let mut t = flow_table(&s, r, thin)?;
        t.comment_f64("functional_gap", functional_gap);
        tables.push(t);
    }
    for r in [&sphere, &line] {
        tables.push(sweep_table(&s, r, theta0, points));
    }
    Ok(LemniscateRun { tables, sphere, line, functional_gap })
}
