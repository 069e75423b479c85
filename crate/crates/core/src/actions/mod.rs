//! The nine one-parameter group actions as point maps and solution
//! transports, and their resolution into convex-body transformations.

mod body;
mod linalg;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FieldDescriptor, Jet2, ScalarField, SharedField};

pub use body::{
    centro_affine_q, o_matrix, resolve, shear_h, support_through, support_transform, BodyTransform,
    Lemma, ShearQForm,
};
pub use linalg::{
    det, identity, inverse, jacobi_eigh, matmul, matvec, max_abs_diff, orthogonality_error,
    sl_decompose, transpose, Matrix, SlDecomposition,
};

/// Which of the nine actions, with its parameters. Axes are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionKind {
    /// `(Rx, u)` with `R` in SO(n).
    Rotation(Matrix),
    /// `(x, eps u)`, `eps > 0`.
    UScaling(f64),
    /// Projective rotation in the `(x^i, u)` plane.
    Projective { axis: usize, eps: f64 },
    /// `(x, u + eps)`.
    UTranslation(f64),
    /// `(x, u + eps x^i)`.
    ULinearTranslation { axis: usize, eps: f64 },
    /// `(Ax, u)` with `A` in SL(n).
    SpecialLinear(Matrix),
    /// `y^i = e^eps x^i`, `v = e^{eps/(n+1)} u`.
    AxisScaling { axis: usize, eps: f64 },
    /// `y^i = x^i + eps`.
    XTranslation { axis: usize, eps: f64 },
    /// `(x, u) / (1 - eps x^i)`.
    CentroProjective { axis: usize, eps: f64 },
}

/// Serializable summary of an action's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionParams {
    pub id: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub axis: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub matrix: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupAction {
    n: usize,
    kind: ActionKind,
}

fn check_axis(n: usize, axis: usize) -> Result<()> {
    if axis >= n {
        return Err(Error::InvalidParameter(format!(
            "axis {} out of range for n = {n}",
            axis + 1
        )));
    }
    Ok(())
}

fn check_finite(eps: f64) -> Result<()> {
    if !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "non-finite parameter {eps}"
        )));
    }
    Ok(())
}

impl GroupAction {
    pub fn new(n: usize, kind: ActionKind) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        match &kind {
            ActionKind::Rotation(r) => {
                square_of(r, n)?;
                if orthogonality_error(r) > 1e-12 || (det(r) - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter("g1 needs a matrix in SO(n)".into()));
                }
            }
            ActionKind::SpecialLinear(a) => {
                square_of(a, n)?;
                let d = det(a);
                if (d - 1.0).abs() > 1e-12 {
                    return Err(Error::NotSpecialLinear(d));
                }
            }
            ActionKind::UScaling(eps) => {
                if !(*eps > 0.0 && eps.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "g2 needs eps > 0, got {eps}"
                    )));
                }
            }
            ActionKind::UTranslation(eps) => check_finite(*eps)?,
            ActionKind::Projective { axis, eps }
            | ActionKind::ULinearTranslation { axis, eps }
            | ActionKind::AxisScaling { axis, eps }
            | ActionKind::XTranslation { axis, eps }
            | ActionKind::CentroProjective { axis, eps } => {
                check_axis(n, *axis)?;
                check_finite(*eps)?;
            }
        }
        Ok(GroupAction { n, kind })
    }

    pub fn rotation(r: Matrix) -> Result<Self> {
        Self::new(r.len(), ActionKind::Rotation(r))
    }

    pub fn u_scaling(n: usize, eps: f64) -> Result<Self> {
        Self::new(n, ActionKind::UScaling(eps))
    }

    pub fn projective(n: usize, axis: usize, eps: f64) -> Result<Self> {
        Self::new(n, ActionKind::Projective { axis, eps })
    }

    pub fn u_translation(n: usize, eps: f64) -> Result<Self> {
        Self::new(n, ActionKind::UTranslation(eps))
    }

    pub fn u_linear_translation(n: usize, axis: usize, eps: f64) -> Result<Self> {
        Self::new(n, ActionKind::ULinearTranslation { axis, eps })
    }

    pub fn special_linear(a: Matrix) -> Result<Self> {
        Self::new(a.len(), ActionKind::SpecialLinear(a))
    }

    pub fn axis_scaling(n: usize, axis: usize, eps: f64) -> Result<Self> {
        Self::new(n, ActionKind::AxisScaling { axis, eps })
    }

    pub fn x_translation(n: usize, axis: usize, eps: f64) -> Result<Self> {
        Self::new(n, ActionKind::XTranslation { axis, eps })
    }

    pub fn centro_projective(n: usize, axis: usize, eps: f64) -> Result<Self> {
        Self::new(n, ActionKind::CentroProjective { axis, eps })
    }

    /// Builds an action from its id. `g1` rotates the `(axis, axis+1)` plane
    /// by `eps`; `g6` stretches `axis` by `e^eps` and the next axis by
    /// `e^-eps`. A `matrix` overrides both.
    pub fn from_id(
        id: &str,
        n: usize,
        axis: usize,
        eps: f64,
        matrix: Option<Matrix>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        let next = (axis + 1) % n;
        match id {
            "g1" => Self::rotation(
                matrix.map_or_else(|| Ok(plane_rotation(n, axis, next, eps)), |m| check_n(m, n))?,
            ),
            "g2" => Self::u_scaling(n, eps),
            "g3" => Self::projective(n, axis, eps),
            "g4" => Self::u_translation(n, eps),
            "g5" => Self::u_linear_translation(n, axis, eps),
            "g6" => Self::special_linear(matrix.map_or_else(
                || {
                    check_axis(n, axis)?;
                    let mut a = identity(n);
                    if n > 1 {
                        a[axis][axis] = eps.exp();
                        a[next][next] = (-eps).exp();
                    }
                    Ok(a)
                },
                |m| check_n(m, n),
            )?),
            "g7" => Self::axis_scaling(n, axis, eps),
            "g8" => Self::x_translation(n, axis, eps),
            "g9" => Self::centro_projective(n, axis, eps),
            other => Err(Error::InvalidParameter(format!(
                "unknown action id {other:?}"
            ))),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &ActionKind {
        &self.kind
    }

    pub fn id(&self) -> &'static str {
        match self.kind {
            ActionKind::Rotation(_) => "g1",
            ActionKind::UScaling(_) => "g2",
            ActionKind::Projective { .. } => "g3",
            ActionKind::UTranslation(_) => "g4",
            ActionKind::ULinearTranslation { .. } => "g5",
            ActionKind::SpecialLinear(_) => "g6",
            ActionKind::AxisScaling { .. } => "g7",
            ActionKind::XTranslation { .. } => "g8",
            ActionKind::CentroProjective { .. } => "g9",
        }
    }

    pub fn params(&self) -> ActionParams {
        let mut out = ActionParams {
            id: self.id().into(),
            n: self.n,
            axis: None,
            eps: None,
            matrix: None,
        };
        match &self.kind {
            ActionKind::Rotation(m) | ActionKind::SpecialLinear(m) => out.matrix = Some(m.clone()),
            ActionKind::UScaling(e) | ActionKind::UTranslation(e) => out.eps = Some(*e),
            ActionKind::Projective { axis, eps }
            | ActionKind::ULinearTranslation { axis, eps }
            | ActionKind::AxisScaling { axis, eps }
            | ActionKind::XTranslation { axis, eps }
            | ActionKind::CentroProjective { axis, eps } => {
                out.axis = Some(*axis);
                out.eps = Some(*eps);
            }
        }
        out
    }

    pub fn identity_for(&self) -> GroupAction {
        let kind = match &self.kind {
            ActionKind::Rotation(_) => ActionKind::Rotation(identity(self.n)),
            ActionKind::SpecialLinear(_) => ActionKind::SpecialLinear(identity(self.n)),
            ActionKind::UScaling(_) => ActionKind::UScaling(1.0),
            other => with_eps(other, 0.0),
        };
        GroupAction { n: self.n, kind }
    }

    pub fn inverse(&self) -> Result<GroupAction> {
        let kind = match &self.kind {
            ActionKind::Rotation(r) => ActionKind::Rotation(transpose(r)),
            ActionKind::SpecialLinear(a) => ActionKind::SpecialLinear(inverse(a)?),
            ActionKind::UScaling(e) => ActionKind::UScaling(1.0 / e),
            other => with_eps(other, -eps_of(other)),
        };
        Ok(GroupAction { n: self.n, kind })
    }

    /// `self` after `other`: the parameter combines by the action's group law.
    pub fn compose(&self, other: &GroupAction) -> Result<GroupAction> {
        let mismatch =
            || Error::InvalidParameter(format!("cannot compose {} with {}", self.id(), other.id()));
        if self.n != other.n {
            return Err(mismatch());
        }
        let kind = match (&self.kind, &other.kind) {
            (ActionKind::Rotation(a), ActionKind::Rotation(b)) => {
                ActionKind::Rotation(matmul(a, b))
            }
            (ActionKind::SpecialLinear(a), ActionKind::SpecialLinear(b)) => {
                ActionKind::SpecialLinear(matmul(a, b))
            }
            (ActionKind::UScaling(a), ActionKind::UScaling(b)) => ActionKind::UScaling(a * b),
            (a, b)
                if std::mem::discriminant(a) == std::mem::discriminant(b)
                    && axis_of(a) == axis_of(b) =>
            {
                with_eps(a, eps_of(a) + eps_of(b))
            }
            _ => return Err(mismatch()),
        };
        Ok(GroupAction { n: self.n, kind })
    }

    /// Strict positivity of the map's denominator at `x`.
    pub fn is_defined_at(&self, x: &[f64]) -> bool {
        match self.kind {
            ActionKind::Projective { axis, eps } => eps.cos() - x[axis] * eps.sin() > 0.0,
            ActionKind::CentroProjective { axis, eps } => 1.0 - eps * x[axis] > 0.0,
            _ => true,
        }
    }

    /// Image of the graph point `(x, u)`.
    pub fn apply(&self, x: &[f64], u: f64) -> Result<(Vec<f64>, f64)> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "point of length {} for n = {}",
                x.len(),
                self.n
            )));
        }
        if !self.is_defined_at(x) {
            return Err(Error::ActionUndefined);
        }
        let n = self.n as f64;
        let mut y = x.to_vec();
        let v = match &self.kind {
            ActionKind::Rotation(m) | ActionKind::SpecialLinear(m) => {
                y = matvec(m, x);
                u
            }
            ActionKind::UScaling(e) => e * u,
            ActionKind::Projective { axis, eps } => {
                let (s, c) = eps.sin_cos();
                let d = c - x[*axis] * s;
                y = x.iter().map(|v| v / d).collect();
                y[*axis] = (s + x[*axis] * c) / d;
                u / d
            }
            ActionKind::UTranslation(e) => u + e,
            ActionKind::ULinearTranslation { axis, eps } => u + eps * x[*axis],
            ActionKind::AxisScaling { axis, eps } => {
                y[*axis] *= eps.exp();
                (eps / (n + 1.0)).exp() * u
            }
            ActionKind::XTranslation { axis, eps } => {
                y[*axis] += eps;
                u
            }
            ActionKind::CentroProjective { axis, eps } => {
                let d = 1.0 - eps * x[*axis];
                y = x.iter().map(|v| v / d).collect();
                u / d
            }
        };
        Ok((y, v))
    }

    /// Whether the transport of a field is defined at `y`.
    pub fn transport_defined_at(&self, y: &[f64]) -> bool {
        match self.kind {
            ActionKind::Projective { axis, eps } => y[axis] * eps.sin() + eps.cos() > 0.0,
            ActionKind::CentroProjective { axis, eps } => 1.0 + eps * y[axis] > 0.0,
            _ => true,
        }
    }

    /// The field whose graph is the image of the graph of `u`.
    pub fn transport(&self, u: SharedField) -> Result<SharedField> {
        if u.dim() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "field on R^{} for an action on R^{}",
                u.dim(),
                self.n
            )));
        }
        Ok(Arc::new(Transported {
            action: self.clone(),
            inner: u,
        }))
    }
}

fn square_of(m: &[Vec<f64>], n: usize) -> Result<()> {
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "expected a {n}x{n} matrix"
        )));
    }
    Ok(())
}

fn check_n(m: Matrix, n: usize) -> Result<Matrix> {
    square_of(&m, n)?;
    Ok(m)
}

/// Rotation by `theta` taking `e_i` towards `e_j`; the identity when `i == j`.
pub fn plane_rotation(n: usize, i: usize, j: usize, theta: f64) -> Matrix {
    let mut r = identity(n);
    if i != j && i < n && j < n {
        let (s, c) = theta.sin_cos();
        r[i][i] = c;
        r[j][j] = c;
        r[i][j] = -s;
        r[j][i] = s;
    }
    r
}

fn eps_of(kind: &ActionKind) -> f64 {
    match kind {
        ActionKind::UScaling(e) | ActionKind::UTranslation(e) => *e,
        ActionKind::Projective { eps, .. }
        | ActionKind::ULinearTranslation { eps, .. }
        | ActionKind::AxisScaling { eps, .. }
        | ActionKind::XTranslation { eps, .. }
        | ActionKind::CentroProjective { eps, .. } => *eps,
        ActionKind::Rotation(_) | ActionKind::SpecialLinear(_) => f64::NAN,
    }
}

fn axis_of(kind: &ActionKind) -> Option<usize> {
    match kind {
        ActionKind::Projective { axis, .. }
        | ActionKind::ULinearTranslation { axis, .. }
        | ActionKind::AxisScaling { axis, .. }
        | ActionKind::XTranslation { axis, .. }
        | ActionKind::CentroProjective { axis, .. } => Some(*axis),
        _ => None,
    }
}

fn with_eps(kind: &ActionKind, e: f64) -> ActionKind {
    match kind {
        ActionKind::UScaling(_) => ActionKind::UScaling(e),
        ActionKind::UTranslation(_) => ActionKind::UTranslation(e),
        ActionKind::Projective { axis, .. } => ActionKind::Projective {
            axis: *axis,
            eps: e,
        },
        ActionKind::ULinearTranslation { axis, .. } => ActionKind::ULinearTranslation {
            axis: *axis,
            eps: e,
        },
        ActionKind::AxisScaling { axis, .. } => ActionKind::AxisScaling {
            axis: *axis,
            eps: e,
        },
        ActionKind::XTranslation { axis, .. } => ActionKind::XTranslation {
            axis: *axis,
            eps: e,
        },
        ActionKind::CentroProjective { axis, .. } => ActionKind::CentroProjective {
            axis: *axis,
            eps: e,
        },
        other => other.clone(),
    }
}

struct Transported {
    action: GroupAction,
    inner: SharedField,
}

impl ScalarField for Transported {
    fn dim(&self) -> usize {
        self.action.n
    }

    fn eval_jet(&self, y: &[Jet2]) -> Result<Jet2> {
        let values: Vec<f64> = y.iter().map(|j| j.value).collect();
        if !self.action.transport_defined_at(&values) {
            return Err(Error::ActionUndefined);
        }
        let n = self.action.n;
        let lin = |m: &Matrix| -> Vec<Jet2> {
            (0..n)
                .map(|r| {
                    y.iter()
                        .enumerate()
                        .fold(Jet2::constant(y[0].dim(), 0.0), |acc, (k, yk)| {
                            if m[r][k] == 0.0 {
                                acc
                            } else {
                                acc + yk.scale(m[r][k])
                            }
                        })
                })
                .collect()
        };
        match &self.action.kind {
            ActionKind::Rotation(r) => self.inner.eval_jet(&lin(&transpose(r))),
            ActionKind::SpecialLinear(a) => self.inner.eval_jet(&lin(&inverse(a)?)),
            ActionKind::UScaling(e) => Ok(self.inner.eval_jet(y)?.scale(*e)),
            ActionKind::Projective { axis, eps } => {
                let (s, c) = eps.sin_cos();
                let d = y[*axis].scale(s) + c;
                let inv = d.recip();
                let mut x: Vec<Jet2> = y.iter().map(|v| v * &inv).collect();
                x[*axis] = (y[*axis].scale(c) - s) * &inv;
                Ok(self.inner.eval_jet(&x)? * d)
            }
            ActionKind::UTranslation(e) => Ok(self.inner.eval_jet(y)? + *e),
            ActionKind::ULinearTranslation { axis, eps } => {
                Ok(self.inner.eval_jet(y)? + y[*axis].scale(*eps))
            }
            ActionKind::AxisScaling { axis, eps } => {
                let mut x = y.to_vec();
                x[*axis] = y[*axis].scale((-eps).exp());
                Ok(self
                    .inner
                    .eval_jet(&x)?
                    .scale((eps / (n as f64 + 1.0)).exp()))
            }
            ActionKind::XTranslation { axis, eps } => {
                let mut x = y.to_vec();
                x[*axis] = &y[*axis] - *eps;
                self.inner.eval_jet(&x)
            }
            ActionKind::CentroProjective { axis, eps } => {
                let d = y[*axis].scale(*eps) + 1.0;
                let inv = d.recip();
                let x: Vec<Jet2> = y.iter().map(|v| v * &inv).collect();
                Ok(self.inner.eval_jet(&x)? * d)
            }
        }
    }

    fn descriptor(&self) -> FieldDescriptor {
        let p = self.action.params();
        let inner = self.inner.descriptor();
        let mut d = FieldDescriptor::new(format!("{}*{}", p.id, inner.id));
        if let Some(a) = p.axis {
            d = d.with("axis", vec![a as f64]);
        }
        if let Some(e) = p.eps {
            d = d.with("eps", vec![e]);
        }
        if let Some(m) = p.matrix {
            d = d.with("matrix", m.concat());
        }
        for (k, v) in inner.params {
            d = d.with(&format!("base.{k}"), v);
        }
        d
    }
}
