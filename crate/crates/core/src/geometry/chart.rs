use nalgebra::DMatrix;

use super::{weight, Jet2};
use crate::error::{Error, Result};

/// Unit vector in R^{n+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    /// Normalizes `v`; fails on the zero vector.
    pub fn normalized(v: &[f64]) -> Result<Self> {
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(norm > 0.0) || v.len() < 2 {
            return Err(Error::DimensionMismatch(
                "need a nonzero vector of length >= 2".into(),
            ));
        }
        Ok(SpherePoint {
            coords: v.iter().map(|a| a / norm).collect(),
        })
    }

    /// Accepts `v` as is when it has unit length to 1e-14.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if v.len() < 2 || (norm - 1.0).abs() > 1e-14 {
            return Err(Error::DimensionMismatch(format!(
                "|X| = {norm}, expected 1"
            )));
        }
        Ok(SpherePoint { coords: v })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Chart dimension `n`.
    pub fn n(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn last(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }
}

/// `x = -X'/X_{n+1}` on the southern hemisphere.
pub fn project(p: &SpherePoint) -> Result<Vec<f64>> {
    let last = p.last();
    if !(last < 0.0) {
        return Err(Error::OutsideChart);
    }
    Ok(p.coords[..p.n()].iter().map(|a| -a / last).collect())
}

/// `X(x) = (x, -1) / sqrt(1+|x|^2)`.
pub fn unproject(x: &[f64]) -> SpherePoint {
    let s = weight(x).sqrt();
    let coords = x.iter().map(|a| a / s).chain([-1.0 / s]).collect();
    SpherePoint { coords }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricData {
    pub g: Vec<Vec<f64>>,
    pub g_inv: Vec<Vec<f64>>,
    pub det_g: f64,
    /// `christoffel[k][i][j] = Gamma^k_{ij}`.
    pub christoffel: Vec<Vec<Vec<f64>>>,
}

/// Closed-form round metric in the chart.
pub fn metric_at(x: &[f64]) -> MetricData {
    let n = x.len();
    let w = weight(x);
    let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let g = (0..n)
        .map(|i| (0..n).map(|j| (d(i, j) - x[i] * x[j] / w) / w).collect())
        .collect();
    let g_inv = (0..n)
        .map(|i| (0..n).map(|j| w * (d(i, j) + x[i] * x[j])).collect())
        .collect();
    let christoffel = (0..n)
        .map(|k| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| -(d(j, k) * x[i] + d(i, k) * x[j]) / w)
                        .collect()
                })
                .collect()
        })
        .collect();
    MetricData {
        g,
        g_inv,
        det_g: w.powi(-(n as i32 + 1)),
        christoffel,
    }
}

fn det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| m[i][j]).determinant()
}

fn inverse(m: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = m.len();
    let inv = DMatrix::from_fn(n, n, |i, j| m[i][j])
        .try_inverse()
        .ok_or(Error::Singular)?;
    Ok((0..n)
        .map(|i| (0..n).map(|j| inv[(i, j)]).collect())
        .collect())
}

/// Metric and connection computed from derivatives of the embedding `X(x)`:
/// `g_ij = dX/dx^i . dX/dx^j`, `Gamma^k_ij = g^{kl} dX/dx^l . d2X/dx^i dx^j`.
pub fn metric_from_embedding(x: &[f64]) -> Result<MetricData> {
    let n = x.len();
    let seeds = Jet2::seed(x);
    let w = seeds
        .iter()
        .fold(Jet2::constant(n, 1.0), |acc, s| acc + s * s);
    let inv_s = w.sqrt().recip();
    let emb: Vec<Jet2> = seeds.iter().map(|s| s * &inv_s).chain([-&inv_s]).collect();
    let g: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| emb.iter().map(|e| e.gradient[i] * e.gradient[j]).sum())
                .collect()
        })
        .collect();
    let g_inv = inverse(&g)?;
    let christoffel = (0..n)
        .map(|k| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            (0..n)
                                .map(|l| {
                                    g_inv[k][l]
                                        * emb
                                            .iter()
                                            .map(|e| e.gradient[l] * e.hess(i, j))
                                            .sum::<f64>()
                                })
                                .sum()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(MetricData {
        det_g: det(&g),
        g,
        g_inv,
        christoffel,
    })
}

/// Levi-Civita connection from central differences of the closed-form metric.
pub fn christoffel_fd(x: &[f64], h: f64) -> Vec<Vec<Vec<f64>>> {
    let n = x.len();
    let dg: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|l| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[l] += h;
            b[l] -= h;
            let (ga, gb) = (metric_at(&a).g, metric_at(&b).g);
            (0..n)
                .map(|i| (0..n).map(|j| (ga[i][j] - gb[i][j]) / (2.0 * h)).collect())
                .collect()
        })
        .collect();
    let g_inv = metric_at(x).g_inv;
    (0..n)
        .map(|k| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            (0..n)
                                .map(|l| {
                                    0.5 * g_inv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j])
                                })
                                .sum()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-r..r)).collect()
    }

    #[test]
    fn chart_center_and_example() {
        let south = SpherePoint::new(vec![0.0, 0.0, -1.0]).unwrap();
        assert_eq!(project(&south).unwrap(), vec![0.0, 0.0]);
        let x = unproject(&[1.0, 0.0]);
        let r = 1.0 / 2f64.sqrt();
        for (a, b) in x.coords().iter().zip([r, 0.0, -r]) {
            assert!((a - b).abs() < 1e-15);
        }
        let north = SpherePoint::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(project(&north), Err(Error::OutsideChart)));
        let equator = SpherePoint::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(project(&equator), Err(Error::OutsideChart)));
    }

    #[test]
    fn round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut v = v;
            v[3] = -v[3].abs() - 0.05;
            let p = SpherePoint::normalized(&v).unwrap();
            let back = unproject(&project(&p).unwrap());
            for (a, b) in back.coords().iter().zip(p.coords()) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn metric_examples() {
        let m = metric_at(&[0.0, 0.0]);
        assert_eq!(m.g, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(m.det_g, 1.0);
        assert!(m.christoffel.iter().flatten().flatten().all(|v| *v == 0.0));

        let m = metric_at(&[1.0, 0.0]);
        assert_eq!(m.g[0][0], 0.25);
        assert_eq!(m.g[1][1], 0.5);
        assert_eq!(m.g[0][1], 0.0);
        assert_eq!(m.christoffel[0][0][0], -1.0);
        assert_eq!(m.christoffel[1][0][1], -0.5);
        assert_eq!(m.christoffel[0][1][1], 0.0);
        assert_eq!(m.det_g, 0.125);
    }

    #[test]
    fn metric_matches_embedding_and_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [2, 3] {
            for _ in 0..200 {
                let x = random_point(&mut rng, n, 3.0);
                let m = metric_at(&x);
                let e = metric_from_embedding(&x).unwrap();
                let fd = christoffel_fd(&x, 1e-5);
                assert!((m.det_g * det(&m.g_inv) - 1.0).abs() < 1e-12);
                assert!((m.det_g - e.det_g).abs() < 1e-12);
                for i in 0..n {
                    for j in 0..n {
                        let gg: f64 = (0..n).map(|k| m.g[i][k] * m.g_inv[k][j]).sum();
                        assert!((gg - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                        assert!((m.g[i][j] - e.g[i][j]).abs() < 1e-14);
                        for k in 0..n {
                            assert!(
                                (m.christoffel[k][i][j] - e.christoffel[k][i][j]).abs() < 1e-12
                            );
                            assert!((m.christoffel[k][i][j] - fd[k][i][j]).abs() < 1e-6);
                            assert_eq!(m.christoffel[k][i][j], m.christoffel[k][j][i]);
                        }
                    }
                }
            }
        }
    }
}
