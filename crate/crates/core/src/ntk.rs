//! Tangent kernels, Rayleigh quotients and the three lower-bounding tools:
//! the variational form, the cosine/singular-value split and the
//! approximate-SVD bound.

use crate::domain::{inner_values, seminorm_values, DataDist};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, pinv_solve, sym_eigen, Mat, SymMat, MAX_EIGEN_DIM};
use crate::model::{directional, sample_jacobians, NetworkMap};
use crate::rng::Rng;
use alloc::vec::Vec;
use num_traits::Float;

/// J_g = E_x[∇F_θ(x)ᵀ g(x)], an element of Θ.
pub fn tangent_contraction<M: NetworkMap + ?Sized>(model: &M, theta: &[f64], d: &DataDist, g: &[f64]) -> Vec<f64> {
    crate::loss::contract(model, theta, d, g)
}

/// K̄_θ(g, h) = ⟨J_g, J_h⟩_Θ.
pub fn ntk_form<M: NetworkMap + ?Sized>(model: &M, theta: &[f64], g: &[f64], h: &[f64], d: &DataDist) -> f64 {
    let jg = tangent_contraction(model, theta, d, g);
    let jh = tangent_contraction(model, theta, d, h);
    dot(&jg, &jh)
}

/// A(x, y)/(‖x‖‖y‖) for any bilinear form and pair of seminorms.
pub fn rayleigh<X: ?Sized, Y: ?Sized>(
    a: impl Fn(&X, &Y) -> f64,
    x: &X,
    y: &Y,
    norm_x: impl Fn(&X) -> f64,
    norm_y: impl Fn(&Y) -> f64,
) -> Result<f64> {
    let (nx, ny) = (norm_x(x), norm_y(y));
    if !(nx > 0.0) || !(ny > 0.0) {
        return Err(Error::Degenerate("rayleigh quotient of a null vector"));
    }
    Ok(a(x, y) / (nx * ny))
}

/// R(K̄_θ; h, h).
pub fn ntk_rayleigh<M: NetworkMap + ?Sized>(model: &M, theta: &[f64], h: &[f64], d: &DataDist) -> Result<f64> {
    let c = model.output_dim();
    rayleigh(
        |g: &[f64], k: &[f64]| ntk_form(model, theta, g, k, d),
        h,
        h,
        |g: &[f64]| seminorm_values(d, g, c).unwrap_or(0.0),
        |g: &[f64]| seminorm_values(d, g, c).unwrap_or(0.0),
    )
}

/// R(d̄F_θ; ν, h) = ⟨dF_θ·ν, h⟩_D/(‖ν‖‖h‖_D), evaluated pointwise.
pub fn tangent_cosine<M: NetworkMap + ?Sized>(model: &M, theta: &[f64], nu: &[f64], h: &[f64], d: &DataDist) -> Result<f64> {
    let c = model.output_dim();
    let dfnu = directional(model, theta, nu, d);
    let (nn, nh) = (norm(nu), seminorm_values(d, h, c)?);
    if nn == 0.0 || nh == 0.0 {
        return Err(Error::Degenerate("zero direction or zero function"));
    }
    Ok(inner_values(d, &dfnu, h, c) / (nn * nh))
}

#[derive(Debug, Clone)]
pub struct VariationalReport {
    /// R(K̄_θ; h, h).
    pub exact: f64,
    /// Largest R(d̄F; ν, h)² over the random directions.
    pub best_random: f64,
    /// R(d̄F; ν*, h)² at ν* = J_h.
    pub at_maximizer: f64,
    pub violations: usize,
}

impl VariationalReport {
    pub fn holds(&self) -> bool {
        self.violations == 0 && (self.at_maximizer - self.exact).abs() <= 1e-9 * self.exact.abs().max(1e-300)
    }
}

pub fn variational_check<M: NetworkMap + ?Sized>(
    model: &M,
    theta: &[f64],
    h: &[f64],
    d: &DataDist,
    trials: usize,
    rng: &mut Rng,
) -> Result<VariationalReport> {
    let exact = ntk_rayleigh(model, theta, h, d)?;
    let mut best: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..trials {
        let nu = rng.normal_vec(model.param_dim(), 1.0);
        if norm(&nu) == 0.0 {
            continue;
        }
        let r = tangent_cosine(model, theta, &nu, h, d)?;
        let r2 = r * r;
        if r2 > exact + 1e-10 {
            violations += 1;
        }
        best = best.max(r2);
    }
    let star = tangent_contraction(model, theta, d, h);
    let at_maximizer = if norm(&star) == 0.0 {
        0.0
    } else {
        let r = tangent_cosine(model, theta, &star, h, d)?;
        r * r
    };
    Ok(VariationalReport { exact, best_random: best, at_maximizer, violations })
}

#[derive(Debug, Clone)]
pub struct CosineSingular {
    pub mu: f64,
    pub lambda: f64,
    pub bound: f64,
    pub exact: f64,
}

impl CosineSingular {
    pub fn holds(&self) -> bool {
        self.exact >= self.bound - 1e-10
    }
}

const MAX_CONDITION: f64 = 1e12;

fn gram_theta(basis: &[Vec<f64>]) -> Result<SymMat> {
    let k = basis.len();
    SymMat::new(Mat::from_fn(k, |i, j| dot(&basis[i], &basis[j])))
}

/// μ = best cosine between dF·ν and h over ν in the span, λ = smallest
/// ‖dF·ν‖²_D/‖ν‖² over the span.
pub fn cosine_singular_bound<M: NetworkMap + ?Sized>(
    model: &M,
    theta: &[f64],
    h: &[f64],
    basis: &[Vec<f64>],
    d: &DataDist,
) -> Result<CosineSingular> {
    if basis.is_empty() {
        return Err(Error::EmptyDimension);
    }
    let c = model.output_dim();
    let k = basis.len();
    let gb = gram_theta(basis)?;
    let eb = sym_eigen(&gb)?;
    if !(eb.min() > 0.0) || eb.max() / eb.min() > MAX_CONDITION {
        return Err(Error::Degenerate("subspace basis is ill-conditioned"));
    }
    let feats: Vec<Vec<f64>> = basis.iter().map(|b| directional(model, theta, b, d)).collect();
    let gf = SymMat::new(Mat::from_fn(k, |i, j| inner_values(d, &feats[i], &feats[j], c)))?;
    let nh = seminorm_values(d, h, c)?;
    if nh == 0.0 {
        return Err(Error::Degenerate("h has zero seminorm"));
    }

    // D-projection of h on the features: coefficients solve G_f x = (⟨f_i, h⟩)
    let rhs: Vec<f64> = feats.iter().map(|f| inner_values(d, f, h, c)).collect();
    let x = pinv_solve(&gf, &rhs, 1e-13)?;
    let proj_sq = dot(&x, &rhs).max(0.0);
    let mu = (proj_sq.sqrt() / nh).min(1.0);

    // generalized eigenvalue of (G_f, G_b) via G_b^{-1/2}
    let mut inv_sqrt = Mat::zeros(k);
    for i in 0..k {
        for j in 0..k {
            let v: f64 = (0..k).map(|l| eb.vectors.get(i, l) * eb.vectors.get(j, l) / eb.values[l].sqrt()).sum();
            inv_sqrt.set(i, j, v);
        }
    }
    let t = Mat::from_fn(k, |i, j| {
        (0..k)
            .flat_map(|p| (0..k).map(move |q| (p, q)))
            .map(|(p, q)| inv_sqrt.get(i, p) * gf.get(p, q) * inv_sqrt.get(q, j))
            .sum()
    });
    let lambda = sym_eigen(&t.sym_part())?.min().max(0.0);
    let exact = ntk_rayleigh(model, theta, h, d)?;
    Ok(CosineSingular { mu, lambda, bound: mu * mu * lambda, exact })
}

#[derive(Debug, Clone)]
pub struct ShatteringReport {
    /// λ_min of the symmetrized cosine matrix (R(dF·a_i, g_j)).
    pub lam_cross: f64,
    /// min ‖dF·a_i‖_D/‖a_i‖.
    pub rho: f64,
    pub lam_a: f64,
    pub lam_g: f64,
    pub bound: f64,
    /// max over ν ∈ Span(a) of R(d̄F; ν, h).
    pub lhs: f64,
}

impl ShatteringReport {
    pub fn holds(&self) -> bool {
        self.lhs >= self.bound - 1e-9
    }
}

/// The three cosine matrices used by the approximate-SVD bound.
pub fn shattering_matrices<M: NetworkMap + ?Sized>(
    model: &M,
    theta: &[f64],
    a_vecs: &[Vec<f64>],
    g_funcs: &[Vec<f64>],
    d: &DataDist,
) -> Result<(Mat, SymMat, SymMat, f64)> {
    let k = a_vecs.len();
    if k == 0 || g_funcs.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: g_funcs.len() });
    }
    let c = model.output_dim();
    let feats: Vec<Vec<f64>> = a_vecs.iter().map(|a| directional(model, theta, a, d)).collect();
    let na: Vec<f64> = a_vecs.iter().map(|a| norm(a)).collect();
    let nf: Vec<f64> = feats.iter().map(|f| seminorm_values(d, f, c)).collect::<Result<_>>()?;
    let ng: Vec<f64> = g_funcs.iter().map(|g| seminorm_values(d, g, c)).collect::<Result<_>>()?;
    if na.iter().chain(&ng).any(|&v| v == 0.0) {
        return Err(Error::Degenerate("zero basis vector"));
    }
    let rho = (0..k).map(|i| nf[i] / na[i]).fold(f64::INFINITY, f64::min);
    let cross = Mat::from_fn(k, |i, j| {
        if nf[i] == 0.0 {
            0.0
        } else {
            inner_values(d, &feats[i], &g_funcs[j], c) / (nf[i] * ng[j])
        }
    });
    let ma = SymMat::new(Mat::from_fn(k, |i, j| dot(&a_vecs[i], &a_vecs[j]) / (na[i] * na[j])))?;
    let mg = SymMat::new(Mat::from_fn(k, |i, j| inner_values(d, &g_funcs[i], &g_funcs[j], c) / (ng[i] * ng[j])))?;
    Ok((cross, ma, mg, rho))
}

pub fn shattering_bound<M: NetworkMap + ?Sized>(
    model: &M,
    theta: &[f64],
    h: &[f64],
    a_vecs: &[Vec<f64>],
    g_funcs: &[Vec<f64>],
    d: &DataDist,
) -> Result<ShatteringReport> {
    let c = model.output_dim();
    let nh = seminorm_values(d, h, c)?;
    if nh == 0.0 {
        return Err(Error::Degenerate("h has zero seminorm"));
    }
    // h ∈ Span(g), by least squares in the D inner product
    let k = g_funcs.len();
    let gg = SymMat::new(Mat::from_fn(k, |i, j| inner_values(d, &g_funcs[i], &g_funcs[j], c)))?;
    let rhs: Vec<f64> = g_funcs.iter().map(|g| inner_values(d, g, h, c)).collect();
    let coef = pinv_solve(&gg, &rhs, 1e-14)?;
    let mut resid = h.to_vec();
    for (g, &x) in g_funcs.iter().zip(&coef) {
        crate::linalg::axpy(-x, g, &mut resid);
    }
    if seminorm_values(d, &resid, c)? > 1e-8 * nh {
        return Err(Error::InvalidParameter("h is not in the span of g"));
    }

    let (cross, ma, mg, rho) = shattering_matrices(model, theta, a_vecs, g_funcs, d)?;
    let lam_cross = sym_eigen(&cross.sym_part())?.min();
    let lam_a = sym_eigen(&ma)?.max();
    let lam_g = sym_eigen(&mg)?.max();
    let bound = if rho == 0.0 { 0.0 } else { lam_cross * rho / (lam_a * lam_g).sqrt() };

    // exact maximum over Span(a): ‖P_a J_h‖/‖h‖, with P_a the Θ-projection
    let jh = tangent_contraction(model, theta, d, h);
    let ga = gram_theta(a_vecs)?;
    let b: Vec<f64> = a_vecs.iter().map(|a| dot(a, &jh)).collect();
    let y = pinv_solve(&ga, &b, 1e-14)?;
    let lhs = dot(&y, &b).max(0.0).sqrt() / nh;
    Ok(ShatteringReport { lam_cross, rho, lam_a, lam_g, bound, lhs })
}

/// Gram matrix of the tangent features on a finite sample set; multi-output
/// maps give an (n·c)×(n·c) block matrix.
pub fn ntk_matrix<M: NetworkMap + ?Sized>(model: &M, theta: &[f64], d: &DataDist) -> Result<SymMat> {
    if !d.is_finite() {
        return Err(Error::InvalidParameter("kernel matrix needs a finite distribution"));
    }
    let (c, m) = (model.output_dim(), model.param_dim());
    let n = d.len() * c;
    if n > MAX_EIGEN_DIM {
        return Err(Error::TooLarge { limit: MAX_EIGEN_DIM, got: n });
    }
    let jac = sample_jacobians(model, theta, d);
    let row = |r: usize| &jac[r * m..(r + 1) * m];
    let k = SymMat::new(Mat::from_fn(n, |i, j| dot(row(i), row(j))))?;
    let e = sym_eigen(&k)?;
    let top = e.max();
    if e.min() < -1e-10 * top {
        return Err(Error::Indefinite { min: e.min(), max: top });
    }
    if n > m && e.values[n - m - 1] > 1e-8 * top {
        return Err(Error::InvalidParameter("kernel rank exceeds the parameter count"));
    }
    Ok(k)
}
