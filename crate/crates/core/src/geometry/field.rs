use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Jet2;
use crate::error::{Error, Result};

/// Catalog id plus numeric parameters of a closed-form field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub id: String,
    pub params: BTreeMap<String, Vec<f64>>,
}

impl FieldDescriptor {
    pub fn new(id: impl Into<String>) -> Self {
        FieldDescriptor {
            id: id.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, values: Vec<f64>) -> Self {
        self.params.insert(key.to_string(), values);
        self
    }
}

impl fmt::Display for FieldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id)?;
        for (k, v) in &self.params {
            write!(f, " {k}={v:?}")?;
        }
        Ok(())
    }
}

/// Twice differentiable function on the chart `R^n`. Evaluating on jets
/// lets fields compose with point maps while keeping exact derivatives.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval_jet(&self, x: &[Jet2]) -> Result<Jet2>;

    fn descriptor(&self) -> FieldDescriptor;

    fn jet(&self, x: &[f64]) -> Result<Jet2> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point of length {} for n = {}",
                x.len(),
                self.dim()
            )));
        }
        self.eval_jet(&Jet2::seed(x))
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.jet(x)?.value)
    }
}

pub type SharedField = Arc<dyn ScalarField>;

fn jet_dim(x: &[Jet2]) -> usize {
    x.first().map_or(0, Jet2::dim)
}

/// `|x|^2 + 1` on jets.
pub fn jet_weight(x: &[Jet2]) -> Jet2 {
    x.iter()
        .fold(Jet2::constant(jet_dim(x), 1.0), |acc, v| acc + v * v)
}

/// Projective form of the support function of `M B + c`, where `B` is the
/// unit ball in `R^{n+1}`: `u(x) = |M^T (x, -1)| + c . (x, -1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidField {
    m: Vec<Vec<f64>>,
    center: Vec<f64>,
}

impl EllipsoidField {
    pub fn new(m: Vec<Vec<f64>>, center: Vec<f64>) -> Result<Self> {
        let k = m.len();
        if k < 2 || m.iter().any(|r| r.len() != k) || center.len() != k {
            return Err(Error::DimensionMismatch(
                "ellipsoid needs a square (n+1) matrix".into(),
            ));
        }
        let det = nalgebra::DMatrix::from_fn(k, k, |i, j| m[i][j]).determinant();
        if det.abs() < 1e-300 {
            return Err(Error::Singular);
        }
        Ok(EllipsoidField { m, center })
    }

    /// `u0 = sqrt(1+|x|^2)`.
    pub fn unit_ball(n: usize) -> Self {
        Self::scaled_ball(n, 1.0)
    }

    pub fn scaled_ball(n: usize, c: f64) -> Self {
        let m = (0..=n)
            .map(|i| (0..=n).map(|j| if i == j { c } else { 0.0 }).collect())
            .collect();
        EllipsoidField {
            m,
            center: vec![0.0; n + 1],
        }
    }

    /// Unit ball translated by `b`.
    pub fn translated_ball(b: Vec<f64>) -> Self {
        let mut e = Self::unit_ball(b.len() - 1);
        e.center = b;
        e
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Support function `|M^T X| + c . X` at any direction.
    pub fn support(&self, dir: &[f64]) -> f64 {
        let k = self.m.len();
        let norm = (0..k)
            .map(|a| (0..k).map(|b| self.m[b][a] * dir[b]).sum::<f64>().powi(2))
            .sum::<f64>()
            .sqrt();
        norm + self.center.iter().zip(dir).map(|(c, d)| c * d).sum::<f64>()
    }
}

impl ScalarField for EllipsoidField {
    fn dim(&self) -> usize {
        self.m.len() - 1
    }

    fn eval_jet(&self, x: &[Jet2]) -> Result<Jet2> {
        let k = self.m.len();
        if x.len() + 1 != k {
            return Err(Error::DimensionMismatch(
                "ellipsoid evaluated at wrong dimension".into(),
            ));
        }
        let d = jet_dim(x);
        let z: Vec<Jet2> = x.iter().cloned().chain([Jet2::constant(d, -1.0)]).collect();
        let mut sq = Jet2::constant(d, 0.0);
        for a in 0..k {
            let mut comp = Jet2::constant(d, 0.0);
            for (b, zb) in z.iter().enumerate() {
                if self.m[b][a] != 0.0 {
                    comp = comp + zb.scale(self.m[b][a]);
                }
            }
            sq = sq + &comp * &comp;
        }
        let mut out = sq.sqrt();
        for (c, zb) in self.center.iter().zip(&z) {
            if *c != 0.0 {
                out = out + zb.scale(*c);
            }
        }
        Ok(out)
    }

    fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor::new("ellipsoid")
            .with("matrix", self.m.iter().flatten().copied().collect())
            .with("center", self.center.clone())
    }
}

/// `u = 1/2 x^T A x + b . x + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticField {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: f64,
}

impl QuadraticField {
    /// `1/2 |x|^2 + c`.
    pub fn isotropic(n: usize, c: f64) -> Self {
        let a = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        QuadraticField {
            a,
            b: vec![0.0; n],
            c,
        }
    }
}

impl ScalarField for QuadraticField {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn eval_jet(&self, x: &[Jet2]) -> Result<Jet2> {
        let mut out = Jet2::constant(jet_dim(x), self.c);
        for (i, xi) in x.iter().enumerate() {
            out = out + xi.scale(self.b[i]);
            for (j, xj) in x.iter().enumerate() {
                if self.a[i][j] != 0.0 {
                    out = out + (xi * xj).scale(0.5 * self.a[i][j]);
                }
            }
        }
        Ok(out)
    }

    fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor::new("quadratic")
            .with("a", self.a.iter().flatten().copied().collect())
            .with("b", self.b.clone())
            .with("c", vec![self.c])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField {
    pub n: usize,
    pub c: f64,
}

impl ScalarField for ConstantField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_jet(&self, x: &[Jet2]) -> Result<Jet2> {
        Ok(Jet2::constant(jet_dim(x), self.c))
    }

    fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor::new("constant").with("c", vec![self.c])
    }
}

/// Pointwise sum of two fields.
#[derive(Clone)]
pub struct SumField(pub SharedField, pub SharedField);

impl ScalarField for SumField {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval_jet(&self, x: &[Jet2]) -> Result<Jet2> {
        Ok(self.0.eval_jet(x)? + self.1.eval_jet(x)?)
    }

    fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor::new(format!(
            "sum({}, {})",
            self.0.descriptor().id,
            self.1.descriptor().id
        ))
    }
}

/// `h(X(x)) = u(x) / sqrt(1+|x|^2)`, as a field in chart coordinates.
#[derive(Clone)]
pub struct SupportFromProjective(pub SharedField);

impl ScalarField for SupportFromProjective {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval_jet(&self, x: &[Jet2]) -> Result<Jet2> {
        Ok(self.0.eval_jet(x)? / jet_weight(x).sqrt())
    }

    fn descriptor(&self) -> FieldDescriptor {
        let inner = self.0.descriptor();
        FieldDescriptor {
            id: format!("support({})", inner.id),
            params: inner.params,
        }
    }
}

/// `u(x) = h(X(x)) sqrt(1+|x|^2)` for `h` given in chart coordinates.
#[derive(Clone)]
pub struct ProjectiveFromSupport(pub SharedField);

impl ScalarField for ProjectiveFromSupport {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval_jet(&self, x: &[Jet2]) -> Result<Jet2> {
        Ok(self.0.eval_jet(x)? * jet_weight(x).sqrt())
    }

    fn descriptor(&self) -> FieldDescriptor {
        let inner = self.0.descriptor();
        FieldDescriptor {
            id: format!("projective({})", inner.id),
            params: inner.params,
        }
    }
}

pub fn support_from_projective(u: SharedField) -> SharedField {
    Arc::new(SupportFromProjective(u))
}

pub fn projective_from_support(h: SharedField) -> SharedField {
    Arc::new(ProjectiveFromSupport(h))
}
