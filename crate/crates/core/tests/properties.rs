use klflow_core::bounds::{linear_exp_bound, logistic_bound, sine_constants_raw};
use klflow_core::domain::{inner_values, DataDist};
use klflow_core::flow::{integrate, FlowConfig, Instruments};
use klflow_core::linalg::{gershgorin_max, gershgorin_min, sym_eigen, Mat, SymMat};
use klflow_core::loss::{CrossEntropy, Desingularizer, FunctionalLoss, LogDesing, LogisticDesing, Quadratic};
use klflow_core::model::{lemniscate_eval, softargmax, sample_outputs, LinearModel, NetworkMap, SumOfSines, Variant};
use klflow_core::ntk::{ntk_matrix, ntk_rayleigh};
use klflow_core::rng::Rng;
use klflow_core::specfun::{first_zero_of_phi, lambert_w0, lambert_w0_of_exp, phi, psi, sinc, sinc_triple};
use proptest::prelude::*;

fn sym(n: usize, vals: &[f64]) -> SymMat {
    let mut m = Mat::zeros(n);
    let mut k = 0;
    for i in 0..n {
        for j in 0..=i {
            m.set(i, j, vals[k]);
            m.set(j, i, vals[k]);
            k += 1;
        }
    }
    SymMat::new(m).unwrap()
}

fn finite(seed: u64, n: usize, dim: usize) -> DataDist {
    let mut rng = Rng::new(seed);
    let w = (0..n).map(|_| rng.range(0.1, 1.0)).collect();
    DataDist::finite(dim, rng.normal_vec(n * dim, 1.0), Some(w)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gershgorin_brackets_spectrum(n in 1usize..=8, vals in prop::collection::vec(-1.0f64..1.0, 36)) {
        let a = sym(n, &vals);
        let e = sym_eigen(&a).unwrap();
        prop_assert!(gershgorin_min(a.mat()).unwrap() <= e.min() + 1e-12);
        prop_assert!(e.max() <= gershgorin_max(a.mat()).unwrap() + 1e-12);
    }

    #[test]
    fn eigen_reconstructs_and_is_orthonormal(n in 1usize..=8, vals in prop::collection::vec(-1.0f64..1.0, 36)) {
        let a = sym(n, &vals);
        let e = sym_eigen(&a).unwrap();
        let (mut rec, mut orth) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| e.vectors.get(i, k) * e.values[k] * e.vectors.get(j, k)).sum();
                rec += (v - a.get(i, j)).powi(2);
                let g: f64 = (0..n).map(|k| e.vectors.get(k, i) * e.vectors.get(k, j)).sum();
                orth += (g - if i == j { 1.0 } else { 0.0 }).powi(2);
            }
        }
        prop_assert!(rec.sqrt() <= 1e-9 * a.mat().frobenius().max(1e-300));
        prop_assert!(orth.sqrt() <= 1e-9);
    }

    #[test]
    fn w0_round_trip(x in 0.0f64..700.0) {
        let w = lambert_w0(x * x.exp()).unwrap();
        prop_assert!((w - x).abs() <= 1e-10 * x.max(1e-300) + 1e-15);
    }

    #[test]
    fn w0_increasing(a in 0.0f64..1e6, b in 0.0f64..1e6) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(lo < hi);
        prop_assert!(lambert_w0(lo).unwrap() < lambert_w0(hi).unwrap());
    }

    #[test]
    fn w0_log_lower_bound(a in 1.0f64..690.0) {
        // x = eᵃ ≥ e
        prop_assert!(lambert_w0_of_exp(a) >= a - a.ln() - 1e-12 * a);
    }

    #[test]
    fn sinc_envelopes(x in -100.0f64..100.0) {
        prop_assume!(x != 0.0);
        let t = sinc_triple(x);
        let ax = x.abs();
        prop_assert!(t.s.abs() <= 1.0f64.min(2.0 / ax) + 1e-15);
        prop_assert!(t.psi.abs() <= 0.5f64.min(2.0 / ax) + 1e-15);
        prop_assert!(t.phi.abs() <= 2.0 / ax + 1e-15);
    }

    #[test]
    fn sinc_derivatives_match_differences(x in -50.0f64..50.0) {
        prop_assume!(x.abs() > 1e-3);
        let h = 1e-5;
        let d1 = (sinc(x + h) - sinc(x - h)) / (2.0 * h);
        let d2 = (sinc(x + h) - 2.0 * sinc(x) + sinc(x - h)) / (h * h);
        prop_assert!((-psi(x) - d1).abs() <= 1e-6);
        prop_assert!((-phi(x) - d2).abs() <= 1e-5);
    }

    #[test]
    fn psi_up_phi_down_before_first_zero(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let x0 = first_zero_of_phi();
        let (lo, hi) = if a < b { (a * x0, b * x0) } else { (b * x0, a * x0) };
        prop_assert!(psi(lo) >= 0.0 && phi(hi) >= -1e-15);
        prop_assert!(psi(lo) <= psi(hi) + 1e-15);
        prop_assert!(phi(lo) >= phi(hi) - 1e-15);
    }

    #[test]
    fn inner_product_cauchy_schwarz_and_bilinear(seed in any::<u64>(), n in 1usize..30, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let d = finite(seed, n, 2);
        let mut rng = Rng::new(seed ^ 0x55);
        let (g1, g2, h) = (rng.normal_vec(n, 1.0), rng.normal_vec(n, 1.0), rng.normal_vec(n, 1.0));
        let ip = |x: &[f64], y: &[f64]| inner_values(&d, x, y, 1);
        prop_assert!(ip(&g1, &h).abs() <= (ip(&g1, &g1) * ip(&h, &h)).sqrt() + 1e-12);
        let comb: Vec<f64> = g1.iter().zip(&g2).map(|(x, y)| a * x + b * y).collect();
        prop_assert!((ip(&comb, &h) - a * ip(&g1, &h) - b * ip(&g2, &h)).abs() <= 1e-12 * (1.0 + ip(&comb, &comb) + ip(&h, &h)));
    }

    #[test]
    fn quadrature_converged_at_256_nodes(r in 0.5f64..20.0, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let (u, v) = (s * 50.0 / r, t * 50.0 / r);
        let q = |n: usize| {
            let d = DataDist::uniform_interval(r, n).unwrap();
            let g = d.sample(|x| (u * x[0]).sin());
            let h = d.sample(|x| (v * x[0]).sin());
            inner_values(&d, &g, &h, 1)
        };
        prop_assert!((q(256) - q(512)).abs() <= 1e-10);
    }

    #[test]
    fn lemniscate_images_on_curve(t in -20.0f64..20.0) {
        for v in [Variant::Sphere, Variant::Line] {
            let (a, b) = lemniscate_eval(v, t);
            prop_assert!(((a * a + b * b).powi(2) - (a * a - b * b)).abs() <= 1e-10);
        }
        let (a, b) = lemniscate_eval(Variant::Sphere, t);
        let (c, d) = lemniscate_eval(Variant::Sphere, t + 2.0 * std::f64::consts::PI);
        prop_assert!((a - c).abs() <= 1e-12 && (b - d).abs() <= 1e-12);
    }

    #[test]
    fn softargmax_in_simplex(u in prop::collection::vec(-700.0f64..700.0, 1..8)) {
        let p = softargmax(&u);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn sines_are_odd(theta in prop::collection::vec(-5.0f64..5.0, 6), x in -10.0f64..10.0) {
        let m = SumOfSines { m: 3 };
        let (mut p, mut q) = ([0.0], [0.0]);
        m.eval(&theta, &[x], &mut p);
        m.eval(&theta, &[-x], &mut q);
        prop_assert!((p[0] + q[0]).abs() <= 1e-12 * (1.0 + p[0].abs()));
    }

    #[test]
    fn loss_gradient_contract(seed in any::<u64>(), n in 1usize..12, soft in any::<bool>()) {
        let d = finite(seed, n, 1);
        let mut rng = Rng::new(seed ^ 0xa1);
        let c = 3;
        let quad = Quadratic::full(rng.normal_vec(n, 1.0));
        let targets: Vec<f64> = (0..n).flat_map(|_| softargmax(&rng.normal_vec(c, 1.0))).collect();
        let ce = if soft {
            CrossEntropy::soft(c, targets).unwrap()
        } else {
            CrossEntropy::dirac(c, &(0..n).map(|i| i % c).collect::<Vec<_>>()).unwrap()
        };
        let losses: [&dyn FunctionalLoss; 2] = [&quad, &ce];
        for l in losses {
            let k = l.out_dim();
            let f = rng.normal_vec(n * k, 1.0);
            let g = rng.normal_vec(n * k, 1.0);
            let e = 1e-6;
            let fp: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + e * b).collect();
            let fm: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a - e * b).collect();
            let fd = (l.value(&d, &fp) - l.value(&d, &fm)) / (2.0 * e);
            let an = inner_values(&d, &l.grad(&d, &f), &g, k);
            prop_assert!((fd - an).abs() <= 1e-5 * (1.0 + an.abs()));
        }
    }

    #[test]
    fn desingularizers_monotone_and_invertible(a in 1e-6f64..30.0, b in 1e-6f64..30.0) {
        let ds: [&dyn Desingularizer; 2] = [&LogDesing, &LogisticDesing];
        for p in ds {
            if a < b {
                prop_assert!(p.phi(a) < p.phi(b));
            }
            prop_assert!((p.phi_inv(p.phi(a)) - a).abs() <= 1e-9 * a.max(1.0));
            let h = 1e-6 * a;
            let fd = (p.phi(a + h) - p.phi(a - h)) / (2.0 * h);
            prop_assert!((fd - p.dphi(a)).abs() <= 1e-5 * p.dphi(a).abs().max(1.0));
        }
    }

    #[test]
    fn rayleigh_within_weighted_kernel_spectrum(seed in any::<u64>(), n in 2usize..10, dim in 1usize..6) {
        let d = finite(seed, n, dim);
        let mut rng = Rng::new(seed ^ 0x77);
        let model = LinearModel { d: dim };
        let theta = rng.normal_vec(dim, 1.0);
        let h = rng.normal_vec(n, 1.0);
        let k = ntk_matrix(&model, &theta, &d).unwrap();
        let sw: Vec<f64> = d.weights().iter().map(|w| w.sqrt()).collect();
        let kw = SymMat::new(Mat::from_fn(n, |i, j| sw[i] * k.get(i, j) * sw[j])).unwrap();
        let e = sym_eigen(&kw).unwrap();
        let r = ntk_rayleigh(&model, &theta, &h, &d).unwrap();
        let tol = 1e-9 * e.max().max(1.0);
        prop_assert!(r >= e.min() - tol && r <= e.max() + tol);
    }

    #[test]
    fn sine_constants_limit(eta_frac in 0.01f64..0.99, m in 1usize..6) {
        let eta = eta_frac * first_zero_of_phi();
        let c = sine_constants_raw(m, eta, 1e9, 1.0).unwrap();
        prop_assert!((c.kappa0 - phi(eta) / phi(0.0)).abs() <= 1e-6);
        prop_assert!((c.rho0 - psi(eta) / phi(eta)).abs() <= 1e-6 * (1.0 + psi(eta) / phi(eta)));
    }

    #[test]
    fn logistic_bound_starts_at_l0_and_decreases(l0 in 1e-3f64..20.0, eps in 0.01f64..2.0, kappa in 0.01f64..1.0) {
        let b = logistic_bound(eps, kappa, l0).unwrap();
        prop_assert!((b.eval(0.0) - l0).abs() <= 1e-9 * l0.max(1.0));
        let tau = 1.0 / (eps * kappa).powi(2);
        prop_assert!(b.is_non_increasing(100.0 * tau, 1000));
    }

    #[test]
    fn linear_flow_decreases_under_its_bound(seed in any::<u64>(), n in 1usize..8, dim in 1usize..5) {
        let d = finite(seed, n, dim);
        let mut rng = Rng::new(seed ^ 0x3);
        let model = LinearModel { d: dim };
        let target = sample_outputs(&model, &rng.normal_vec(dim, 1.0), &d);
        let theta0 = rng.normal_vec(dim, 1.0);
        let cfg = FlowConfig::rk4(1e-3, 0.5).record_every(5);
        let mut tr = integrate(&model, &Quadratic::full(target), &theta0, &d, &cfg, Instruments { rayleigh: false, desing: None }).unwrap();
        prop_assert!(tr.losses.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300));
        prop_assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
        let mut a = Mat::zeros(dim);
        for i in 0..d.len() {
            let x = d.point(i);
            for p in 0..dim {
                for q in 0..dim {
                    a.set(p, q, a.get(p, q) + d.weight(i) * x[p] * x[q]);
                }
            }
        }
        let lam = klflow_core::linalg::lambda_min_plus(&a.sym_part(), 1e-10).unwrap();
        let b = linear_exp_bound(tr.losses[0], lam).unwrap();
        tr.attach_bound(&b);
        prop_assert!(tr.bound_dominates());
    }
}
