use std::ops::{Add, Div, Mul, Neg, Sub};

/// Second-order forward-mode number: a value together with its gradient and
/// Hessian with respect to `dim` seed variables. Arithmetic propagates all
/// three exactly (up to rounding), so closed-form fields get machine-precision
/// derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Row-major `dim x dim`, symmetric.
    pub hessian: Vec<f64>,
}

impl Jet2 {
    pub fn constant(dim: usize, value: f64) -> Self {
        Jet2 {
            value,
            gradient: vec![0.0; dim],
            hessian: vec![0.0; dim * dim],
        }
    }

    /// The `i`-th seed variable evaluated at `value`.
    pub fn variable(dim: usize, i: usize, value: f64) -> Self {
        let mut j = Jet2::constant(dim, value);
        j.gradient[i] = 1.0;
        j
    }

    /// Seeds every coordinate of `x`.
    pub fn seed(x: &[f64]) -> Vec<Jet2> {
        (0..x.len())
            .map(|i| Jet2::variable(x.len(), i, x[i]))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hessian[i * self.dim() + j]
    }

    pub fn hessian_rows(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d)
            .map(|i| self.hessian[i * d..(i + 1) * d].to_vec())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.gradient.iter().all(|v| v.is_finite())
            && self.hessian.iter().all(|v| v.is_finite())
    }

    /// Applies a scalar function given its value and first two derivatives at `self.value`.
    pub fn chain(&self, f: f64, df: f64, d2f: f64) -> Jet2 {
        let d = self.dim();
        let mut out = Jet2::constant(d, f);
        for i in 0..d {
            out.gradient[i] = df * self.gradient[i];
            for j in 0..d {
                out.hessian[i * d + j] =
                    df * self.hessian[i * d + j] + d2f * self.gradient[i] * self.gradient[j];
            }
        }
        out
    }

    pub fn sqrt(&self) -> Jet2 {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn powf(&self, e: f64) -> Jet2 {
        let x = self.value;
        self.chain(
            x.powf(e),
            e * x.powf(e - 1.0),
            e * (e - 1.0) * x.powf(e - 2.0),
        )
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Jet2 {
        let x = self.value;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn recip(&self) -> Jet2 {
        let x = self.value;
        self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }

    pub fn scale(&self, c: f64) -> Jet2 {
        Jet2 {
            value: self.value * c,
            gradient: self.gradient.iter().map(|g| g * c).collect(),
            hessian: self.hessian.iter().map(|h| h * c).collect(),
        }
    }

    fn zip(&self, other: &Jet2, f: impl Fn(f64, f64) -> f64) -> Jet2 {
        assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
        Jet2 {
            value: f(self.value, other.value),
            gradient: self
                .gradient
                .iter()
                .zip(&other.gradient)
                .map(|(a, b)| f(*a, *b))
                .collect(),
            hessian: self
                .hessian
                .iter()
                .zip(&other.hessian)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    fn product(&self, other: &Jet2) -> Jet2 {
        assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
        let d = self.dim();
        let (a, b) = (self, other);
        let mut out = Jet2::constant(d, a.value * b.value);
        for i in 0..d {
            out.gradient[i] = a.gradient[i] * b.value + a.value * b.gradient[i];
            for j in 0..d {
                out.hessian[i * d + j] = a.hessian[i * d + j] * b.value
                    + a.value * b.hessian[i * d + j]
                    + a.gradient[i] * b.gradient[j]
                    + a.gradient[j] * b.gradient[i];
            }
        }
        out
    }
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet2> for &Jet2 {
            type Output = Jet2;
            fn $method(self, rhs: &Jet2) -> Jet2 {
                let f: fn(&Jet2, &Jet2) -> Jet2 = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet2> for Jet2 {
            type Output = Jet2;
            fn $method(self, rhs: Jet2) -> Jet2 {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet2> for Jet2 {
            type Output = Jet2;
            fn $method(self, rhs: &Jet2) -> Jet2 {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet2> for &Jet2 {
            type Output = Jet2;
            fn $method(self, rhs: Jet2) -> Jet2 {
                self.$method(&rhs)
            }
        }
        impl $trait<f64> for Jet2 {
            type Output = Jet2;
            fn $method(self, rhs: f64) -> Jet2 {
                let c = Jet2::constant(self.dim(), rhs);
                (&self).$method(&c)
            }
        }
        impl $trait<f64> for &Jet2 {
            type Output = Jet2;
            fn $method(self, rhs: f64) -> Jet2 {
                let c = Jet2::constant(self.dim(), rhs);
                self.$method(&c)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.zip(b, |x, y| x + y));
jet_binop!(Sub, sub, |a, b| a.zip(b, |x, y| x - y));
jet_binop!(Mul, mul, |a, b| a.product(b));
jet_binop!(Div, div, |a, b| a.product(&b.recip()));

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_and_hessian() {
        // f(x, y) = x^2 y at (3, 2): grad (12, 9), hess [[4, 6], [6, 0]]
        let v = Jet2::seed(&[3.0, 2.0]);
        let f = &(&v[0] * &v[0]) * &v[1];
        assert_eq!(f.value, 18.0);
        assert_eq!(f.gradient, vec![12.0, 9.0]);
        assert_eq!(f.hessian, vec![4.0, 6.0, 6.0, 0.0]);
    }

    #[test]
    fn sqrt_of_norm() {
        // sqrt(1 + x^2 + y^2) at (1, 0): value sqrt 2, hess diag(1/2^{3/2}, 1/sqrt 2)
        let v = Jet2::seed(&[1.0, 0.0]);
        let w = (&v[0] * &v[0] + &v[1] * &v[1]) + 1.0;
        let s = w.sqrt();
        let r2 = 2f64.sqrt();
        assert!((s.value - r2).abs() < 1e-15);
        assert!((s.gradient[0] - 1.0 / r2).abs() < 1e-15);
        assert!((s.hess(0, 0) - 1.0 / (2.0 * r2)).abs() < 1e-15);
        assert!((s.hess(1, 1) - 1.0 / r2).abs() < 1e-15);
        assert_eq!(s.hess(0, 1), 0.0);
    }

    #[test]
    fn quotient_matches_direct() {
        let v = Jet2::seed(&[0.7, -0.4]);
        let q = &v[0] / &(&v[1] + 2.0);
        // d/dx = 1/(y+2), d/dy = -x/(y+2)^2, d2/dxdy = -1/(y+2)^2, d2/dy2 = 2x/(y+2)^3
        let d = 1.6;
        assert!((q.gradient[0] - 1.0 / d).abs() < 1e-15);
        assert!((q.gradient[1] + 0.7 / (d * d)).abs() < 1e-15);
        assert!((q.hess(0, 1) + 1.0 / (d * d)).abs() < 1e-15);
        assert!((q.hess(1, 1) - 1.4 / (d * d * d)).abs() < 1e-14);
    }

    #[test]
    fn transcendental_chain() {
        let v = Jet2::seed(&[0.3]);
        let f = v[0].sin() * v[0].exp();
        let (s, c, e) = (0.3f64.sin(), 0.3f64.cos(), 0.3f64.exp());
        assert!((f.gradient[0] - e * (s + c)).abs() < 1e-15);
        assert!((f.hess(0, 0) - 2.0 * e * c).abs() < 1e-14);
        let g = v[0].powf(2.5).ln();
        assert!((g.gradient[0] - 2.5 / 0.3).abs() < 1e-12);
    }
}
