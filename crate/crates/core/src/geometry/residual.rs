use nalgebra::DMatrix;

use super::chart::metric_at;
use super::field::ScalarField;
use super::plane_rhs;
use crate::error::{Error, Result};
use crate::exact::to_f64;
use crate::exact::Rat;

pub(crate) fn det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| m[i][j]).determinant()
}

/// Covariant Hessian `d2h/dx^i dx^j - Gamma^k_ij dh/dx^k` of the round metric.
pub fn sphere_hessian(h: &dyn ScalarField, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let j = h.jet(x)?;
    let gamma = metric_at(x).christoffel;
    let n = x.len();
    Ok((0..n)
        .map(|a| {
            (0..n)
                .map(|b| j.hess(a, b) - (0..n).map(|k| gamma[k][a][b] * j.gradient[k]).sum::<f64>())
                .collect()
        })
        .collect())
}

/// `det D^2u - (1+|x|^2)^{-(p+n+1)/2} u^{p-1}`.
pub fn residual_plane(u: &dyn ScalarField, p: &Rat, x: &[f64]) -> Result<f64> {
    let j = u.jet(x)?;
    if !(j.value > 0.0) {
        return Err(Error::PositivityViolated(j.value));
    }
    let rhs = plane_rhs(to_f64(p), x, j.value)?;
    Ok(det(&j.hessian_rows()) - rhs)
}

/// `det(nabla^2 h + h g) / det g - h^{p-1}` with `h` in chart coordinates.
pub fn residual_sphere(h: &dyn ScalarField, p: &Rat, x: &[f64]) -> Result<f64> {
    let hv = h.value(x)?;
    if !(hv > 0.0) {
        return Err(Error::PositivityViolated(hv));
    }
    let m = metric_at(x);
    let mut a = sphere_hessian(h, x)?;
    for (i, row) in a.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            *v += hv * m.g[i][k];
        }
    }
    Ok(det(&a) / m.det_g - ((to_f64(p) - 1.0) * hv.ln()).exp())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::exact::{int, rat};
    use crate::geometry::field::*;
    use crate::geometry::weight;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn point(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-r..r)).collect()
    }

    #[test]
    fn constant_has_zero_hessian() {
        let h = ConstantField { n: 2, c: 1.0 };
        let m = sphere_hessian(&h, &[0.4, -1.0]).unwrap();
        assert!(m.iter().flatten().all(|v| *v == 0.0));
        for p in [int(-3), int(2), rat(1, 3)] {
            assert!(residual_sphere(&h, &p, &[0.4, -1.0]).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn unit_ball_solves_every_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in 1..=3 {
            let u = EllipsoidField::unit_ball(n);
            for p in -5..=5 {
                for _ in 0..100 {
                    let x = point(&mut rng, n, 5.0);
                    assert!(residual_plane(&u, &int(p), &x).unwrap().abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn scaled_ball_homogeneity() {
        for n in 1..=3 {
            let u = EllipsoidField::scaled_ball(n, 2.0);
            let x = vec![0.0; n];
            assert!(residual_plane(&u, &int(n as i64 + 1), &x).unwrap().abs() < 1e-12);
            let r = residual_plane(&u, &int(n as i64 + 2), &x).unwrap();
            let expected = 2f64.powi(n as i32) - 2f64.powi(n as i32 + 1);
            assert!((r - expected).abs() < 1e-12 && r.abs() > 0.1);
        }
    }

    #[test]
    fn quadratic_at_origin() {
        let u = QuadraticField::isotropic(2, 1.0);
        assert!(residual_plane(&u, &int(1), &[0.0, 0.0]).unwrap().abs() < 1e-15);
        assert!(residual_plane(&u, &int(1), &[1.0, 0.5]).unwrap().abs() > 1e-3);
    }

    #[test]
    fn positivity_required() {
        let u = ConstantField { n: 2, c: -1.0 };
        assert!(matches!(
            residual_plane(&u, &int(2), &[0.0, 0.0]),
            Err(Error::PositivityViolated(_))
        ));
    }

    #[test]
    fn sphere_and_plane_hessians_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let fields: Vec<SharedField> = vec![
            Arc::new(EllipsoidField::unit_ball(2)),
            Arc::new(EllipsoidField::translated_ball(vec![0.3, -0.2, 0.1])),
            Arc::new(QuadraticField::isotropic(2, 2.0)),
        ];
        for u in fields {
            let h = support_from_projective(u.clone());
            for _ in 0..200 {
                let x = point(&mut rng, 2, 4.0);
                let a = sphere_hessian(h.as_ref(), &x).unwrap();
                let g = metric_at(&x).g;
                let hv = h.value(&x).unwrap();
                let uj = u.jet(&x).unwrap();
                let s = weight(&x).sqrt();
                for i in 0..2 {
                    for k in 0..2 {
                        let lhs = a[i][k] + hv * g[i][k];
                        assert!((lhs - uj.hess(i, k) / s).abs() < 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn sphere_hessian_is_linear() {
        let a: SharedField = Arc::new(EllipsoidField::translated_ball(vec![0.3, -0.2, 0.1]));
        let b: SharedField = Arc::new(QuadraticField::isotropic(2, 2.0));
        let s = SumField(a.clone(), b.clone());
        let x = [0.6, -1.1];
        let (ha, hb, hs) = (
            sphere_hessian(a.as_ref(), &x).unwrap(),
            sphere_hessian(b.as_ref(), &x).unwrap(),
            sphere_hessian(&s, &x).unwrap(),
        );
        for i in 0..2 {
            for k in 0..2 {
                assert!((hs[i][k] - ha[i][k] - hb[i][k]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn sphere_and_plane_residuals_vanish_together() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u: SharedField = Arc::new(EllipsoidField::translated_ball(vec![0.2, 0.1, 0.3]));
        let h = support_from_projective(u.clone());
        for _ in 0..100 {
            let x = point(&mut rng, 2, 3.0);
            assert!(residual_plane(u.as_ref(), &int(1), &x).unwrap().abs() < 1e-10);
            assert!(residual_sphere(h.as_ref(), &int(1), &x).unwrap().abs() < 1e-10);
            assert!(residual_plane(u.as_ref(), &int(3), &x).unwrap().abs() > 1e-6);
            assert!(residual_sphere(h.as_ref(), &int(3), &x).unwrap().abs() > 1e-6);
        }
    }
}
