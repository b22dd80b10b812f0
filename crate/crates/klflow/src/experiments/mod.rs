//! End-to-end runs of the five case studies, each producing CSV tables.

pub mod lemniscate;
pub mod linear;
pub mod logistic;
pub mod sines;
pub mod twolayer;

use crate::config::{Case, ExperimentConfig};
use crate::table::Table;
use anyhow::{anyhow, Result};
use klflow_core::bounds::BoundCurve;
use klflow_core::flow::{Halt, Integrator, Trajectory};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    Ok(match cfg.case {
        Case::Linear => linear::run(cfg)?.tables,
        Case::Lemniscate => lemniscate::run(cfg)?.tables,
        Case::Logistic => logistic::run(cfg)?.tables,
        Case::Sines => sines::run(cfg)?.tables,
        Case::TwoLayer => twolayer::run(cfg)?.tables,
    })
}

pub fn write_all(tables: &[Table], dir: &Path) -> Result<Vec<PathBuf>> {
    tables.iter().map(|t| t.write(dir)).collect()
}

/// Maps `f` over `0..n` on `jobs` threads; results keep index order.
pub fn par_map<T, F>(jobs: usize, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if jobs <= 1 {
        return Ok((0..n).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

pub(crate) fn core_err(e: klflow_core::Error) -> anyhow::Error {
    anyhow!("{e}")
}

pub(crate) fn require(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(anyhow!("invalid configuration: {msg}"))
    }
}

fn halt_name(h: Halt) -> &'static str {
    match h {
        Halt::Trivial => "trivial",
        Halt::StopLoss => "stop_loss",
        Halt::MaxTime => "max_time",
    }
}

pub(crate) fn integrator_name(i: Integrator) -> &'static str {
    match i {
        Integrator::Euler => "euler",
        Integrator::Rk4 => "rk4",
    }
}

pub(crate) fn parse_integrator(s: &str) -> Result<Integrator> {
    match s {
        "euler" => Ok(Integrator::Euler),
        "rk4" => Ok(Integrator::Rk4),
        _ => Err(anyhow!("integrator must be `euler` or `rk4`, got `{s}`")),
    }
}

pub(crate) fn add_certificate(t: &mut Table, curve: &BoundCurve) {
    for &(k, v) in &curve.certificate {
        t.comment_f64(k, v);
    }
}

/// Trajectory table: t, loss, grad_norm, rayleigh, kl_residual, bound, the
/// extra columns, then θ. Keeps every `thin`-th record and the last one.
pub(crate) fn trajectory_table(name: &str, tr: &Trajectory, extra: &[(&str, Vec<f64>)], thin: usize) -> Table {
    let p = tr.params.first().map_or(0, Vec::len);
    let mut header: Vec<String> = ["t", "loss", "grad_norm", "rayleigh", "kl_residual", "bound"].map(String::from).to_vec();
    header.extend(extra.iter().map(|(n, _)| n.to_string()));
    header.extend((0..p).map(|i| format!("theta_{i}")));
    let mut t = Table::new(name, header);
    t.comment("halt", halt_name(tr.halt));
    t.comment("records", tr.len());
    let opt = |v: &Option<Vec<f64>>, k: usize| v.as_ref().map_or(f64::NAN, |v| v[k]);
    let thin = thin.max(1);
    for k in 0..tr.len() {
        if k % thin != 0 && k + 1 != tr.len() {
            continue;
        }
        let mut row = vec![tr.times[k], tr.losses[k], tr.grad_norms[k], opt(&tr.rayleigh, k), opt(&tr.kl_residual, k), opt(&tr.bound, k)];
        row.extend(extra.iter().map(|(_, v)| v[k]));
        row.extend_from_slice(&tr.params[k]);
        t.push(row);
    }
    t
}

/// Trajectory columns read back from a table written by `trajectory_table`.
#[derive(Debug, Clone)]
pub struct TrajectoryRecords {
    pub times: Vec<f64>,
    pub losses: Vec<f64>,
    pub bound: Option<Vec<f64>>,
    pub params: Vec<Vec<f64>>,
}

pub fn read_trajectory(t: &Table) -> Result<TrajectoryRecords> {
    let col = |n: &str| t.column(n).ok_or_else(|| anyhow!("table {} has no `{n}` column", t.name));
    let times = col("t")?;
    let losses = col("loss")?;
    let bound = t.column("bound").filter(|b| b.iter().all(|v| !v.is_nan()));
    let idx: Vec<usize> = (0..).map_while(|i| t.col_index(&format!("theta_{i}"))).collect();
    let params = t.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect();
    Ok(TrajectoryRecords { times, losses, bound, params })
}
