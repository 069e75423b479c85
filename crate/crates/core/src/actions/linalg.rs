use crate::error::{Error, Result};

pub type Matrix = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn transpose(a: &[Vec<f64>]) -> Matrix {
    let (r, c) = (a.len(), a.first().map_or(0, Vec::len));
    (0..c).map(|j| (0..r).map(|i| a[i][j]).collect()).collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Matrix {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn matvec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j]).determinant()
}

pub fn inverse(a: &[Vec<f64>]) -> Result<Matrix> {
    let n = a.len();
    let inv = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j])
        .try_inverse()
        .ok_or(Error::Singular)?;
    Ok((0..n)
        .map(|i| (0..n).map(|j| inv[(i, j)]).collect())
        .collect())
}

/// Largest entry of `a - b` in absolute value.
pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Deviation of `a^T a` from the identity.
pub fn orthogonality_error(a: &[Vec<f64>]) -> f64 {
    max_abs_diff(&matmul(&transpose(a), a), &identity(a.len()))
}

fn check_square(a: &[Vec<f64>]) -> Result<usize> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(
            "expected a nonempty square matrix".into(),
        ));
    }
    Ok(n)
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Eigenvalues come
/// back in descending order; column `k` of the matrix is the eigenvector of
/// eigenvalue `k`.
pub fn jacobi_eigh(s: &[Vec<f64>]) -> Result<(Vec<f64>, Matrix)> {
    let n = check_square(s)?;
    for i in 0..n {
        for j in 0..i {
            if (s[i][j] - s[j][i]).abs() > 1e-12 * (1.0 + s[i][j].abs().max(s[j][i].abs())) {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let mut a: Matrix = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (s[i][j] + s[j][i])).collect())
        .collect();
    let mut v = identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = a.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-32 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - sn * akq;
                    a[k][q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - sn * aqk;
                    a[q][k] = sn * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - sn * vq;
                    row[q] = sn * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&k| a[k][k]).collect();
    let vectors = (0..n)
        .map(|i| order.iter().map(|&k| v[i][k]).collect())
        .collect();
    Ok((values, vectors))
}

/// `A = P diag(lambda) Q` with `P, Q` in SO(n) and positive `lambda`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SlDecomposition {
    pub p: Matrix,
    pub lambda: Vec<f64>,
    pub q: Matrix,
}

impl SlDecomposition {
    pub fn reconstruct(&self) -> Matrix {
        let scaled: Matrix = self
            .p
            .iter()
            .map(|row| row.iter().zip(&self.lambda).map(|(x, l)| x * l).collect())
            .collect();
        matmul(&scaled, &self.q)
    }
}

/// Factorization of a unimodular matrix into rotation, positive diagonal and
/// rotation. Uses one-sided Jacobi orthogonalization of the columns, which
/// keeps full relative accuracy in the singular values.
pub fn sl_decompose(a: &[Vec<f64>]) -> Result<SlDecomposition> {
    let n = check_square(a)?;
    let d = det(a);
    if !((d - 1.0).abs() <= 1e-10) {
        return Err(Error::NotSpecialLinear(d));
    }
    let mut u: Matrix = a.to_vec();
    let mut v = identity(n);
    for _sweep in 0..100 {
        let mut rotated = false;
        for j in 0..n {
            for k in j + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for row in &u {
                    alpha += row[j] * row[j];
                    beta += row[k] * row[k];
                    gamma += row[j] * row[k];
                }
                if gamma.abs() <= 1e-17 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut u, &mut v] {
                    for row in m.iter_mut() {
                        let (x, y) = (row[j], row[k]);
                        row[j] = c * x - s * y;
                        row[k] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..n)
        .map(|k| u.iter().map(|r| r[k] * r[k]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let lambda: Vec<f64> = order.iter().map(|&k| sigma[k]).collect();
    let mut p: Matrix = (0..n)
        .map(|i| order.iter().map(|&k| u[i][k] / sigma[k]).collect())
        .collect();
    // rows of Q are the columns of V
    let mut q: Matrix = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i][k]).collect())
        .collect();
    if det(&p) < 0.0 {
        for row in p.iter_mut() {
            row[n - 1] = -row[n - 1];
        }
        for x in q[n - 1].iter_mut() {
            *x = -*x;
        }
    }
    Ok(SlDecomposition { p, lambda, q })
}
