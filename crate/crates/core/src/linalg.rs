//! Dense vectors and matrices, a cyclic Jacobi eigensolver and Gershgorin
//! eigenvalue estimates.

use crate::error::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

pub const MAX_EIGEN_DIM: usize = 512;
const MAX_SWEEPS: usize = 100;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Square dense matrix, row-major. Not necessarily symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDimension);
        }
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
        }
        if !all_finite(&data) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Mat { n, data })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Mat { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius(&self) -> f64 {
        norm(&self.data)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(&self.data[i * self.n..(i + 1) * self.n], v)).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.n, |i, j| self.get(j, i))
    }

    /// (M + Mᵀ)/2, which has the same quadratic form uᵀMu.
    pub fn sym_part(&self) -> SymMat {
        SymMat(Mat::from_fn(self.n, |i, j| 0.5 * (self.get(i, j) + self.get(j, i))))
    }
}

/// Symmetric matrix; symmetry is checked then enforced on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat(Mat);

impl SymMat {
    pub fn new(m: Mat) -> Result<Self> {
        let n = m.dim();
        if n == 0 {
            return Err(Error::EmptyDimension);
        }
        if !all_finite(m.as_slice()) {
            return Err(Error::NonFinite("matrix"));
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (m.get(i, j), m.get(j, i));
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(m.sym_part())
    }

    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        SymMat::new(Mat::from_rows(n, data)?)
    }

    pub fn diag(d: &[f64]) -> Result<Self> {
        let mut m = Mat::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        SymMat::new(m)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn mat(&self) -> &Mat {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` of this matrix is the eigenvector for `values[k]`.
    pub vectors: Mat,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.vectors.dim()).map(|i| self.vectors.get(i, k)).collect()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Full eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen(m: &SymMat) -> Result<Eigen> {
    let n = m.dim();
    if n > MAX_EIGEN_DIM {
        return Err(Error::TooLarge { limit: MAX_EIGEN_DIM, got: n });
    }
    let mut a = m.mat().clone();
    let mut v = Mat::identity(n);
    let fro = a.frobenius();
    let target = 1e-14 * fro;

    let off = |a: &Mat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a.get(i, j) * a.get(i, j);
                }
            }
        }
        s.sqrt()
    };

    let mut converged = fro == 0.0 || off(&a) <= target;
    let mut sweep = 0;
    while !converged && sweep < MAX_SWEEPS {
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
        sweep += 1;
        converged = off(&a) <= target;
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
    let values = order.iter().map(|&i| a.get(i, i)).collect();
    let vectors = Mat::from_fn(n, |i, k| v.get(i, order[k]));
    Ok(Eigen { values, vectors })
}

/// Smallest eigenvalue above `rel_tol · λ_max`, or 0 when there is none.
pub fn lambda_min_plus(m: &SymMat, rel_tol: f64) -> Result<f64> {
    let e = sym_eigen(m)?;
    let (lo, hi) = (e.min(), e.max());
    if lo < -1e-10 * hi.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Indefinite { min: lo, max: hi });
    }
    let thresh = rel_tol * hi;
    Ok(e.values.iter().copied().find(|&l| l > thresh).unwrap_or(0.0))
}

fn half_offdiag(m: &Mat, i: usize) -> f64 {
    (0..m.dim()).filter(|&j| j != i).map(|j| 0.5 * (m.get(i, j).abs() + m.get(j, i).abs())).sum()
}

/// Lower bound on λ_min of the symmetric part: inf_i X_ii − ½Σ_{j≠i}(|X_ij|+|X_ji|).
pub fn gershgorin_min(m: &Mat) -> Result<f64> {
    if m.dim() == 0 {
        return Err(Error::EmptyDimension);
    }
    Ok((0..m.dim()).map(|i| m.get(i, i) - half_offdiag(m, i)).fold(f64::INFINITY, f64::min))
}

pub fn gershgorin_max(m: &Mat) -> Result<f64> {
    if m.dim() == 0 {
        return Err(Error::EmptyDimension);
    }
    Ok((0..m.dim()).map(|i| m.get(i, i) + half_offdiag(m, i)).fold(f64::NEG_INFINITY, f64::max))
}

/// Solve the symmetric positive definite system `G x = b` through the
/// eigendecomposition, dropping directions below `rel_tol · λ_max`.
pub fn pinv_solve(g: &SymMat, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    let e = sym_eigen(g)?;
    let n = g.dim();
    let cut = rel_tol * e.max().abs();
    let mut x = vec![0.0; n];
    for k in 0..n {
        let l = e.values[k];
        if l > cut {
            let vk = e.vector(k);
            axpy(dot(&vk, b) / l, &vk, &mut x);
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn sym2(a: f64, b: f64, c: f64) -> SymMat {
        SymMat::from_rows(2, vec![a, b, b, c]).unwrap()
    }

    #[test]
    fn eigen_identity_and_diagonal() {
        let e = sym_eigen(&SymMat::new(Mat::identity(3)).unwrap()).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        let e = sym_eigen(&SymMat::diag(&[5.0, 2.0]).unwrap()).unwrap();
        assert_eq!(e.values, vec![2.0, 5.0]);
        assert_eq!(e.vector(0), vec![0.0, 1.0]);
    }

    #[test]
    fn eigen_two_by_two() {
        let e = sym_eigen(&sym2(2.0, 1.0, 2.0)).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_and_empty() {
        assert!(matches!(
            SymMat::from_rows(2, vec![1.0, 0.5, 0.4, 1.0]),
            Err(Error::NotSymmetric { .. })
        ));
        assert_eq!(Mat::from_rows(0, vec![]), Err(Error::EmptyDimension));
        assert!(SymMat::from_rows(1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn min_plus() {
        let m = SymMat::diag(&[0.0, 0.0, 3.0]).unwrap();
        assert_eq!(lambda_min_plus(&m, 1e-10).unwrap(), 3.0);
        let m = SymMat::diag(&[1e-15, 2.0]).unwrap();
        assert_eq!(lambda_min_plus(&m, 1e-10).unwrap(), 2.0);
        let m = SymMat::new(Mat::identity(4)).unwrap();
        assert_eq!(lambda_min_plus(&m, 1e-10).unwrap(), 1.0);
        let m = SymMat::diag(&[-1.0, 2.0]).unwrap();
        assert!(matches!(lambda_min_plus(&m, 1e-10), Err(Error::Indefinite { .. })));
    }

    #[test]
    fn gershgorin_examples() {
        let id = Mat::identity(3);
        assert_eq!(gershgorin_min(&id).unwrap(), 1.0);
        assert_eq!(gershgorin_max(&id).unwrap(), 1.0);
        let m = sym2(2.0, 1.0, 2.0);
        assert_eq!(gershgorin_min(m.mat()).unwrap(), 1.0);
        assert_eq!(gershgorin_max(m.mat()).unwrap(), 3.0);
        let m = Mat::from_rows(2, vec![1.0, 0.1, 0.3, 1.0]).unwrap();
        assert!((gershgorin_min(&m).unwrap() - 0.8).abs() < 1e-15);
    }

    fn random_sym(rng: &mut Rng, n: usize) -> SymMat {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = rng.range(-1.0, 1.0);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        SymMat::new(m).unwrap()
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let mut rng = Rng::new(11);
        for n in 1..=12 {
            let m = random_sym(&mut rng, n);
            let e = sym_eigen(&m).unwrap();
            let v = &e.vectors;
            let fro = m.mat().frobenius();
            let mut err = 0.0;
            let mut orth = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let r: f64 = (0..n).map(|k| v.get(i, k) * e.values[k] * v.get(j, k)).sum();
                    err += (m.get(i, j) - r).powi(2);
                    let o: f64 = (0..n).map(|k| v.get(k, i) * v.get(k, j)).sum();
                    orth += (o - if i == j { 1.0 } else { 0.0 }).powi(2);
                }
            }
            assert!(err.sqrt() <= 1e-9 * fro);
            assert!(orth.sqrt() <= 1e-9);
            for k in 0..n {
                let vk = e.vector(k);
                let mv = m.mat().mul_vec(&vk);
                let res = norm(&sub(&mv, &scaled(&vk, e.values[k])));
                assert!(res <= 1e-10 * fro);
            }
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn pinv_solves_regular_system() {
        let g = sym2(4.0, 1.0, 3.0);
        let x = pinv_solve(&g, &[1.0, 2.0], 1e-12).unwrap();
        let r = g.mat().mul_vec(&x);
        assert!((r[0] - 1.0).abs() < 1e-12 && (r[1] - 2.0).abs() < 1e-12);
    }
}
