//! Property suites run by `klflow verify`. Each check reports pass/fail and
//! its worst margin (positive means slack, negative means violation).

use anyhow::{anyhow, bail, Result};
use klflow_core::bounds::{
    draw_admissible, gershgorin_chain, lemma_a8_check, lemniscate_bound, linear_exp_bound, logistic_bound, logistic_tail_check,
    sine_rayleigh_sweep, two_layer_bound,
};
use klflow_core::domain::{gauss_legendre_nodes, inner_values, DataDist};
use klflow_core::flow::{integrate, FlowConfig, Instruments};
use klflow_core::linalg::{gershgorin_max, gershgorin_min, sym_eigen, Mat, SymMat};
use klflow_core::loss::{evaluate, CrossEntropy, FunctionalLoss, Quadratic};
use klflow_core::model::{sample_outputs, sine_gram, Lemniscate, LinearLogits, LinearModel, NetworkMap, SumOfSines, TwoLayerNet, Variant};
use klflow_core::ntk::{cosine_singular_bound, ntk_matrix, shattering_bound, variational_check};
use klflow_core::rng::Rng;
use klflow_core::specfun::{first_zero_of_phi, lambert_w0, phi, sinc_property_check, sinc_triple, SincTriple};
use std::collections::BTreeMap;
use std::io::Write;

pub const SUITES: &[&str] = &["specfun", "linalg", "domain", "model", "loss", "ntk", "flow", "bounds"];

#[derive(Debug, Clone)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub pass: bool,
    pub margin: f64,
}

fn check(suite: &'static str, name: &str, margin: f64) -> Check {
    Check { suite, name: name.to_string(), pass: margin >= 0.0, margin }
}

fn err<E: std::fmt::Display>(e: E) -> anyhow::Error {
    anyhow!("{e}")
}

pub fn run(suite: &str) -> Result<Vec<Check>> {
    if suite == "all" {
        let mut out = Vec::new();
        for s in SUITES {
            out.extend(run(s)?);
        }
        return Ok(out);
    }
    match suite {
        "specfun" => specfun(),
        "linalg" => linalg(),
        "domain" => domain(),
        "model" => model(),
        "loss" => loss(),
        "ntk" => ntk(),
        "flow" => flow(),
        "bounds" => bounds(),
        other => bail!("unknown suite `{other}`; expected all or one of: {}", SUITES.join(", ")),
    }
}

pub fn print_table<W: Write>(checks: &[Check], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{:<10} {:<34} {:<6} {:>14}", "suite", "property", "status", "worst margin")?;
    for c in checks {
        writeln!(out, "{:<10} {:<34} {:<6} {:>14.6e}", c.suite, c.name, if c.pass { "ok" } else { "FAIL" }, c.margin + 0.0)?;
    }
    Ok(())
}

fn specfun() -> Result<Vec<Check>> {
    const S: &str = "specfun";
    let mut worst_res = f64::INFINITY;
    for k in -24..=600 {
        let x = 10f64.powf(k as f64 * 0.5);
        let w = lambert_w0(x).map_err(err)?;
        worst_res = worst_res.min(1e-12 - (w * w.exp() - x).abs() / x.max(1.0));
    }
    let mut worst_rt = f64::INFINITY;
    for k in 0..=2000 {
        let x = 50.0 * k as f64 / 2000.0;
        let w = lambert_w0(x * x.exp()).map_err(err)?;
        worst_rt = worst_rt.min(1e-12 * x.max(1.0) - (w - x).abs());
    }
    let x0 = first_zero_of_phi();
    let real = sinc_property_check(sinc_triple, 20_000);
    let flipped = sinc_property_check(
        |x| {
            let t = sinc_triple(x);
            SincTriple { phi: -t.phi, ..t }
        },
        20_000,
    );
    Ok(vec![
        check(S, "w0_residual", worst_res),
        check(S, "w0_round_trip", worst_rt),
        check(S, "phi_first_zero", 1e-3 - (x0 - 2.0815).abs()),
        check(S, "phi_at_zero", -(phi(0.0) - 1.0 / 3.0).abs()),
        check(S, "sinc_envelopes", if real.holds() { real.worst.max(0.0) } else { real.worst }),
        // a sign error in sinc'' must be caught
        check(S, "sinc_mutation_detected", if flipped.holds() { -1.0 } else { -flipped.worst }),
    ])
}

fn random_sym(rng: &mut Rng, n: usize) -> Result<SymMat> {
    let mut m = Mat::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let v = rng.normal() * if rng.uniform() < 0.3 { 10.0 } else { 1.0 };
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    SymMat::new(m).map_err(err)
}

fn linalg() -> Result<Vec<Check>> {
    const S: &str = "linalg";
    let mut rng = Rng::new(0x6e);
    let (mut gm, mut rec) = (f64::INFINITY, f64::INFINITY);
    for t in 0..1000 {
        let a = random_sym(&mut rng, 2 + t % 9)?;
        let e = sym_eigen(&a).map_err(err)?;
        let scale = a.mat().frobenius().max(1.0);
        gm = gm.min(e.min() - gershgorin_min(a.mat()).map_err(err)? + 1e-12 * scale);
        gm = gm.min(gershgorin_max(a.mat()).map_err(err)? - e.max() + 1e-12 * scale);
        if t % 5 == 0 {
            let n = a.dim();
            let mut r: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let v: f64 = (0..n).map(|k| e.vectors.get(i, k) * e.values[k] * e.vectors.get(j, k)).sum();
                    r = r.max((v - a.get(i, j)).abs());
                }
            }
            rec = rec.min(1e-10 * scale - r);
        }
    }
    Ok(vec![check(S, "gershgorin_brackets_jacobi", gm), check(S, "jacobi_reconstruction", rec)])
}

fn domain() -> Result<Vec<Check>> {
    const S: &str = "domain";
    let mut gl = f64::INFINITY;
    for n in [2usize, 5, 16, 64] {
        let (x, w) = gauss_legendre_nodes(n).map_err(err)?;
        for k in 0..2 * n {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
            gl = gl.min(1e-13 - (q - exact).abs());
        }
    }
    let mut rng = Rng::new(0xa8);
    let mut gram = f64::INFINITY;
    for _ in 0..100 {
        let r = rng.range(0.5, 20.0);
        let (u, v) = (rng.range(0.0, 50.0 / r), rng.range(0.0, 50.0 / r));
        let d = DataDist::uniform_interval(r, 512).map_err(err)?;
        let eu = d.sample(|x| (u * x[0]).sin());
        let ev = d.sample(|x| (v * x[0]).sin());
        let du = d.sample(|x| x[0] * (u * x[0]).cos());
        let dv = d.sample(|x| x[0] * (v * x[0]).cos());
        let (ee, de, dd) = sine_gram(u, v, r);
        let scale = r * r;
        gram = gram.min(1e-8 - (ee - inner_values(&d, &eu, &ev, 1)).abs());
        gram = gram.min(1e-8 * scale - (de - inner_values(&d, &du, &ev, 1)).abs());
        gram = gram.min(1e-8 * scale - (dd - inner_values(&d, &du, &dv, 1)).abs());
    }
    Ok(vec![check(S, "gauss_legendre_exactness", gl), check(S, "sine_gram_vs_quadrature", gram)])
}

/// The five network maps with a data distribution, a parameter and a loss.
pub struct Instance {
    pub name: &'static str,
    pub model: Box<dyn NetworkMap>,
    pub d: DataDist,
    pub theta: Vec<f64>,
    pub loss: Box<dyn FunctionalLoss>,
}

pub fn instances(rng: &mut Rng) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    let finite = |rng: &mut Rng, n: usize, dim: usize| {
        let w = (0..n).map(|_| rng.range(0.2, 1.0)).collect();
        DataDist::finite(dim, rng.normal_vec(n * dim, 1.0), Some(w)).map_err(err)
    };
    let d = finite(rng, 7, 3)?;
    out.push(Instance {
        name: "linear",
        model: Box::new(LinearModel { d: 3 }),
        theta: rng.normal_vec(3, 1.0),
        loss: Box::new(Quadratic::full(rng.normal_vec(7, 1.0))),
        d,
    });
    let d = DataDist::finite(2, vec![rng.range(1.0, 5.0), rng.range(-2.0, 2.0)], None).map_err(err)?;
    let var = if rng.uniform() < 0.5 { Variant::Sphere } else { Variant::Line };
    out.push(Instance {
        name: "lemniscate",
        model: Box::new(Lemniscate(var)),
        theta: vec![rng.range(-1.5, 1.5)],
        loss: Box::new(Quadratic::full(vec![rng.normal()])),
        d,
    });
    let d = finite(rng, 6, 4)?;
    let labels: Vec<usize> = (0..6).map(|_| rng.below(3)).collect();
    out.push(Instance {
        name: "logits",
        model: Box::new(LinearLogits { c: 3, d: 4 }),
        theta: rng.normal_vec(12, 1.0),
        loss: Box::new(CrossEntropy::dirac(3, &labels).map_err(err)?),
        d,
    });
    let r = rng.range(2.0, 6.0);
    let pts: Vec<f64> = (0..40).map(|_| rng.range(-r, r)).collect();
    let d = DataDist::finite(1, pts, None).map_err(err)?;
    let target = d.sample(|x| (1.1 * x[0]).sin() - 0.4 * (2.3 * x[0]).sin());
    out.push(Instance {
        name: "sines",
        model: Box::new(SumOfSines { m: 3 }),
        theta: rng.normal_vec(6, 1.0),
        loss: Box::new(Quadratic::half(target)),
        d,
    });
    let d = finite(rng, 12, 2)?;
    out.push(Instance {
        name: "twolayer",
        model: Box::new(TwoLayerNet { m: 5, d: 2 }),
        theta: rng.normal_vec(15, 1.0),
        loss: Box::new(Quadratic::full(rng.normal_vec(12, 1.0))),
        d,
    });
    Ok(out)
}

fn model() -> Result<Vec<Check>> {
    let mut rng = Rng::new(0x3d);
    let mut out = Vec::new();
    for inst in instances(&mut rng)? {
        let (c, p) = (inst.model.output_dim(), inst.model.param_dim());
        let mut worst = f64::INFINITY;
        for i in 0..inst.d.len() {
            let x = inst.d.point(i);
            let mut jac = vec![0.0; c * p];
            inst.model.grad(&inst.theta, x, &mut jac);
            for j in 0..p {
                let h = 1e-6;
                let (mut tp, mut tm) = (inst.theta.clone(), inst.theta.clone());
                tp[j] += h;
                tm[j] -= h;
                let (mut fp, mut fm) = (vec![0.0; c], vec![0.0; c]);
                inst.model.eval(&tp, x, &mut fp);
                inst.model.eval(&tm, x, &mut fm);
                for k in 0..c {
                    let fd = (fp[k] - fm[k]) / (2.0 * h);
                    worst = worst.min(1e-6 * (1.0 + fd.abs()) - (fd - jac[k * p + j]).abs());
                }
            }
        }
        out.push(check("model", &format!("jacobian_fd_{}", inst.name), worst));
    }
    Ok(out)
}

fn loss() -> Result<Vec<Check>> {
    let mut rng = Rng::new(0x1055);
    let mut out = Vec::new();
    for inst in instances(&mut rng)? {
        let f = sample_outputs(inst.model.as_ref(), &inst.theta, &inst.d);
        let g = inst.loss.grad(&inst.d, &f);
        let c = inst.model.output_dim();
        let mut worst = f64::INFINITY;
        for _ in 0..20 {
            let h = rng.normal_vec(f.len(), 1.0);
            let s = 1e-6;
            let fp: Vec<f64> = f.iter().zip(&h).map(|(a, b)| a + s * b).collect();
            let fm: Vec<f64> = f.iter().zip(&h).map(|(a, b)| a - s * b).collect();
            let fd = (inst.loss.value(&inst.d, &fp) - inst.loss.value(&inst.d, &fm)) / (2.0 * s);
            let an = inner_values(&inst.d, &g, &h, c);
            worst = worst.min(1e-6 * (1.0 + fd.abs()) - (fd - an).abs());
        }
        out.push(check("loss", &format!("functional_gradient_fd_{}", inst.name), worst));
    }
    Ok(out)
}

/// Σ_ij w_i w_j g_iᵀ K_ij h_j from the dense kernel matrix.
fn dense_form(k: &SymMat, d: &DataDist, c: usize, g: &[f64], h: &[f64]) -> f64 {
    let n = d.len() * c;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += g[i] * d.weight(i / c) * k.get(i, j) * d.weight(j / c) * h[j];
        }
    }
    s
}

/// ‖∇L‖² against K̄(∇ℓ, ∇ℓ) built from the dense kernel; relative error.
pub fn composition_error(inst: &Instance) -> Result<f64> {
    let e = evaluate(inst.model.as_ref(), inst.loss.as_ref(), &inst.d, &inst.theta);
    let k = ntk_matrix(inst.model.as_ref(), &inst.theta, &inst.d).map_err(err)?;
    let form = dense_form(&k, &inst.d, inst.model.output_dim(), &e.fgrad, &e.fgrad);
    Ok((e.grad_norm_sq() - form).abs() / e.grad_norm_sq().max(1e-300))
}

/// Relative gap between R(K̄; h, h) and the tangent cosine² at ν* = J_h.
pub fn variational_error(inst: &Instance, rng: &mut Rng) -> Result<(f64, usize)> {
    let e = evaluate(inst.model.as_ref(), inst.loss.as_ref(), &inst.d, &inst.theta);
    let rep = variational_check(inst.model.as_ref(), &inst.theta, &e.fgrad, &inst.d, 50, rng).map_err(err)?;
    Ok(((rep.at_maximizer - rep.exact).abs() / rep.exact.abs().max(1e-300), rep.violations))
}

/// Cosine-singular split on random finite configurations; returns the worst
/// exact − bound and the number of violations.
pub fn cosine_singular_sweep(trials: usize, seed: u64) -> Result<(f64, usize)> {
    let mut worst = f64::INFINITY;
    let mut bad = 0;
    for t in 0..trials {
        let mut rng = Rng::split(seed, t as u64);
        let (m, dim, n) = (2 + rng.below(4), 1 + rng.below(3), 3 + rng.below(8));
        let net = TwoLayerNet { m, d: dim };
        let d = DataDist::finite(dim, rng.normal_vec(n * dim, 1.0), None).map_err(err)?;
        let theta = rng.normal_vec(net.param_dim(), 1.0);
        let h = rng.normal_vec(n, 1.0);
        let k = 1 + rng.below(net.param_dim());
        let basis: Vec<Vec<f64>> = (0..k).map(|_| rng.normal_vec(net.param_dim(), 1.0)).collect();
        let r = cosine_singular_bound(&net, &theta, &h, &basis, &d).map_err(err)?;
        worst = worst.min(r.exact - r.bound);
        if !r.holds() {
            bad += 1;
        }
    }
    Ok((worst, bad))
}

/// Approximate-SVD bound on random configurations with h in the span of g.
pub fn shattering_sweep(trials: usize, seed: u64) -> Result<(f64, usize)> {
    let mut worst = f64::INFINITY;
    let mut bad = 0;
    for t in 0..trials {
        let mut rng = Rng::split(seed, t as u64);
        let (m, dim, n) = (2 + rng.below(4), 1 + rng.below(3), 4 + rng.below(8));
        let net = TwoLayerNet { m, d: dim };
        let d = DataDist::finite(dim, rng.normal_vec(n * dim, 1.0), None).map_err(err)?;
        let theta = rng.normal_vec(net.param_dim(), 1.0);
        let k = 1 + rng.below(n.min(net.param_dim()).min(4));
        let a: Vec<Vec<f64>> = (0..k).map(|_| rng.normal_vec(net.param_dim(), 1.0)).collect();
        let g: Vec<Vec<f64>> = (0..k).map(|_| rng.normal_vec(n, 1.0)).collect();
        let coef = rng.normal_vec(k, 1.0);
        let mut h = vec![0.0; n];
        for (gi, c) in g.iter().zip(&coef) {
            for (hv, gv) in h.iter_mut().zip(gi) {
                *hv += c * gv;
            }
        }
        let r = shattering_bound(&net, &theta, &h, &a, &g, &d).map_err(err)?;
        worst = worst.min(r.lhs - r.bound);
        if !r.holds() {
            bad += 1;
        }
    }
    Ok((worst, bad))
}

fn ntk() -> Result<Vec<Check>> {
    const S: &str = "ntk";
    let mut rng = Rng::new(0x33);
    let mut out = Vec::new();
    let mut comp: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut var_worst = f64::INFINITY;
    for _ in 0..4 {
        for inst in instances(&mut rng)? {
            let m = 1e-9 - composition_error(&inst)?;
            let e = comp.entry(inst.name).or_insert(f64::INFINITY);
            *e = e.min(m);
            let (gap, viol) = variational_error(&inst, &mut rng)?;
            var_worst = var_worst.min(if viol > 0 { -1.0 } else { 1e-9 - gap });
        }
    }
    for (name, m) in comp {
        out.push(check(S, &format!("composition_{name}"), m));
    }
    out.push(check(S, "variational_equality", var_worst));
    let (w, bad) = cosine_singular_sweep(100, 0xc5)?;
    out.push(Check { pass: bad == 0, ..check(S, "cosine_singular_split", w) });
    let (w, bad) = shattering_sweep(100, 0x5a)?;
    out.push(Check { pass: bad == 0, ..check(S, "approximate_svd_bound", w) });
    Ok(out)
}

fn flow() -> Result<Vec<Check>> {
    const S: &str = "flow";
    let dim = 4;
    let s = (dim as f64).sqrt();
    let pts = (0..dim * dim).map(|k| if k / dim == k % dim { s } else { 0.0 }).collect();
    let d = DataDist::finite(dim, pts, None).map_err(err)?;
    let model = LinearModel { d: dim };
    let target = sample_outputs(&model, &[1.0, -2.0, 0.5, 3.0], &d);
    let loss = Quadratic::full(target);
    let mut out = Vec::new();
    for (name, cfg, tol) in [
        ("rk4_identity_exact", FlowConfig::rk4(1e-3, 2.0).record_every(50), 1e-9),
        ("euler_identity_first_order", FlowConfig::euler(1e-4, 2.0).record_every(50), 1e-2),
    ] {
        let tr = integrate(&model, &loss, &[0.0; 4], &d, &cfg, Instruments::default()).map_err(err)?;
        let mut w = f64::INFINITY;
        for (t, l) in tr.times.iter().zip(&tr.losses) {
            w = w.min(tol - (l / (tr.losses[0] * (-4.0 * t).exp()) - 1.0).abs());
        }
        out.push(check(S, name, w));
    }
    let tr = integrate(&model, &loss, &[0.0; 4], &d, &FlowConfig::euler(1e-2, 5.0), Instruments::default()).map_err(err)?;
    let mono = tr.losses.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    out.push(check(S, "loss_non_increasing", mono));
    Ok(out)
}

fn bounds() -> Result<Vec<Check>> {
    const S: &str = "bounds";
    let mut out = Vec::new();
    let mut rng = Rng::new(0xb0);
    let mut lemma = f64::INFINITY;
    let mut gersh = 0usize;
    for k in 0..100 {
        let (cfg, amps) = draw_admissible(2, 10.0, 0.05, 40.0, 1.0, &mut rng).map_err(err)?;
        let rep = lemma_a8_check(&cfg, 10, &mut rng).map_err(err)?;
        lemma = lemma.min(if rep.holds() { rep.worst_margin } else { -rep.worst_margin.abs().max(1e-300) });
        if k < 25 && !gershgorin_chain(&cfg, &amps, 512).map_err(err)?.holds() {
            gersh += 1;
        }
    }
    out.push(check(S, "sine_gram_lemma_bounds", lemma));
    out.push(check(S, "gershgorin_certificate_chain", -(gersh as f64)));
    let sw = sine_rayleigh_sweep(2, 10.0, 0.05, 40.0, 1.0, 20, 0x51).map_err(err)?;
    out.push(Check { pass: sw.violations == 0, ..check(S, "sine_rayleigh_certificate", sw.min_exact - sw.bound) });

    let mut tail = f64::INFINITY;
    for &(eps, kappa, l0) in &[(1.15, 1.0 / 3.0, 1.1), (0.05, 0.01, 3.0), (0.5, 0.5, 0.01), (2.0, 1.0, 20.0)] {
        let c = logistic_bound(eps, kappa, l0).map_err(err)?;
        let rep = logistic_tail_check(&c, 3.0, 300).map_err(err)?;
        tail = tail.min(if rep.holds() { 1.0 - rep.worst } else { -(rep.worst - 1.0) });
        tail = tail.min(1e-9 - (c.eval(0.0) - l0).abs());
    }
    out.push(check(S, "logistic_tail_and_start", tail));

    let curves = [
        linear_exp_bound(2.0, 0.3).map_err(err)?,
        lemniscate_bound(49.0, 0.4, 4e-3).map_err(err)?,
        logistic_bound(0.3, 0.2, 1.5).map_err(err)?,
        two_layer_bound(2.0, 0.01, 0.7).map_err(err)?,
    ];
    let mono = curves.iter().all(|c| c.is_non_increasing(100.0, 2000));
    out.push(check(S, "bounds_non_increasing", if mono { 0.0 } else { -1.0 }));
    Ok(out)
}
