use serde::{Deserialize, Serialize};

use super::linalg::{det, identity, matvec, orthogonality_error, sl_decompose, transpose, Matrix};
use super::{ActionKind, GroupAction};
use crate::error::{Error, Result};
use crate::geometry::SpherePoint;

/// Transformation of convex bodies in `R^{n+1}`, acting on position vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BodyTransform {
    Rotation { matrix: Matrix },
    Scaling { factors: Vec<f64> },
    Translation { vector: Vec<f64> },
    CentroAffine { matrix: Matrix },
}

impl BodyTransform {
    pub fn kind(&self) -> &'static str {
        match self {
            BodyTransform::Rotation { .. } => "rotation",
            BodyTransform::Scaling { .. } => "scaling",
            BodyTransform::Translation { .. } => "translation",
            BodyTransform::CentroAffine { .. } => "centro-affine",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BodyTransform::Rotation { matrix } | BodyTransform::CentroAffine { matrix } => {
                matrix.len()
            }
            BodyTransform::Scaling { factors } => factors.len(),
            BodyTransform::Translation { vector } => vector.len(),
        }
    }

    /// Checks the group each kind is meant to live in.
    pub fn validate(&self) -> Result<()> {
        match self {
            BodyTransform::Rotation { matrix } => {
                if orthogonality_error(matrix) > 1e-12 || (det(matrix) - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter("rotation is not in SO(n+1)".into()));
                }
            }
            BodyTransform::CentroAffine { matrix } => {
                let d = det(matrix);
                if (d - 1.0).abs() > 1e-12 {
                    return Err(Error::NotSpecialLinear(d));
                }
            }
            BodyTransform::Scaling { factors } => {
                if factors.iter().any(|k| !(*k > 0.0)) {
                    return Err(Error::InvalidParameter(
                        "scaling factors must be positive".into(),
                    ));
                }
            }
            BodyTransform::Translation { .. } => {}
        }
        Ok(())
    }

    /// The linear part as a matrix, `None` for translations.
    pub fn linear(&self) -> Option<Matrix> {
        match self {
            BodyTransform::Rotation { matrix } | BodyTransform::CentroAffine { matrix } => {
                Some(matrix.clone())
            }
            BodyTransform::Scaling { factors } => {
                let mut m = identity(factors.len());
                for (i, k) in factors.iter().enumerate() {
                    m[i][i] = *k;
                }
                Some(m)
            }
            BodyTransform::Translation { .. } => None,
        }
    }

    /// Image `W` of a position vector `Z`.
    pub fn apply_point(&self, z: &[f64]) -> Vec<f64> {
        match self {
            BodyTransform::Translation { vector } => {
                z.iter().zip(vector).map(|(a, b)| a + b).collect()
            }
            other => matvec(&other.linear().unwrap_or_default(), z),
        }
    }

    /// Support function of the image body, given the (1-homogeneous)
    /// support function of the original one.
    pub fn support_after(&self, base: &dyn Fn(&[f64]) -> f64, y: &[f64]) -> f64 {
        match self {
            BodyTransform::Translation { vector } => {
                base(y) + vector.iter().zip(y).map(|(b, v)| b * v).sum::<f64>()
            }
            other => base(&matvec(&transpose(&other.linear().unwrap_or_default()), y)),
        }
    }
}

/// Support function after applying `transforms` in order.
pub fn support_through(
    transforms: &[BodyTransform],
    base: &dyn Fn(&[f64]) -> f64,
    y: &[f64],
) -> f64 {
    match transforms.split_last() {
        None => base(y),
        Some((last, rest)) => last.support_after(&|z: &[f64]| support_through(rest, base, z), y),
    }
}

fn embed(m: &[Vec<f64>]) -> Matrix {
    let n = m.len();
    let mut out = identity(n + 1);
    for i in 0..n {
        out[i][..n].copy_from_slice(&m[i]);
    }
    out
}

/// Rotation of `R^{n+1}` in the `(e_i, e_{n+1})` plane.
pub fn o_matrix(n: usize, axis: usize, eps: f64) -> Matrix {
    let (s, c) = eps.sin_cos();
    let mut m = identity(n + 1);
    m[axis][axis] = c;
    m[axis][n] = -s;
    m[n][axis] = s;
    m[n][n] = c;
    m
}

/// Identity plus `eps` in row `n+1`, column `i`.
pub fn shear_h(n: usize, axis: usize, eps: f64) -> Matrix {
    let mut m = identity(n + 1);
    m[n][axis] = eps;
    m
}

/// Identity plus `-eps` in row `i`, column `n+1`.
pub fn centro_affine_q(n: usize, axis: usize, eps: f64) -> Matrix {
    let mut m = identity(n + 1);
    m[axis][n] = -eps;
    m
}

/// Body transformations realizing an action on support functions, in the
/// order they are applied.
pub fn resolve(a: &GroupAction) -> Result<Vec<BodyTransform>> {
    let n = a.n();
    let out = match a.kind() {
        ActionKind::Rotation(r) => vec![BodyTransform::Rotation { matrix: embed(r) }],
        ActionKind::UScaling(e) => vec![BodyTransform::Scaling {
            factors: vec![*e; n + 1],
        }],
        ActionKind::Projective { axis, eps } => vec![BodyTransform::Rotation {
            matrix: o_matrix(n, *axis, *eps),
        }],
        ActionKind::UTranslation(e) => {
            let mut b = vec![0.0; n + 1];
            b[n] = -e;
            vec![BodyTransform::Translation { vector: b }]
        }
        ActionKind::ULinearTranslation { axis, eps } => {
            let mut b = vec![0.0; n + 1];
            b[*axis] = *eps;
            vec![BodyTransform::Translation { vector: b }]
        }
        ActionKind::SpecialLinear(m) => {
            // the body map is diag(A^{-T}, 1) = diag(P,1) diag(1/lambda,1) diag(Q,1)
            let d = sl_decompose(m)?;
            let mut factors: Vec<f64> = d.lambda.iter().map(|l| 1.0 / l).collect();
            factors.push(1.0);
            vec![
                BodyTransform::Rotation {
                    matrix: embed(&d.q),
                },
                BodyTransform::Scaling { factors },
                BodyTransform::Rotation {
                    matrix: embed(&d.p),
                },
            ]
        }
        ActionKind::AxisScaling { axis, eps } => {
            let np1 = n as f64 + 1.0;
            let mut factors = vec![(eps / np1).exp(); n + 1];
            factors[*axis] = (-eps * n as f64 / np1).exp();
            vec![BodyTransform::Scaling { factors }]
        }
        ActionKind::XTranslation { axis, eps } => vec![BodyTransform::CentroAffine {
            matrix: shear_h(n, *axis, *eps),
        }],
        ActionKind::CentroProjective { axis, eps } => {
            vec![BodyTransform::CentroAffine {
                matrix: centro_affine_q(n, *axis, *eps),
            }]
        }
    };
    Ok(out)
}

/// The two candidate closed forms of the `Q_eps` support identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShearQForm {
    /// `sqrt(1 - 2 eps Y_i Y_{n+1} + eps^2 Y_i^2)`, implemented.
    CrossAxis,
    /// `sqrt(1 - 2 eps Y_i Y_{n+1} + eps^2 Y_{n+1}^2)`.
    PolarAxis,
}

/// Support-function identities relating `q(Y)` of the image body to
/// `h(X)` of the original.
#[derive(Debug, Clone, PartialEq)]
pub enum Lemma {
    Rotation(Matrix),
    Scaling(Vec<f64>),
    Translation(Vec<f64>),
    ShearH {
        n: usize,
        axis: usize,
        eps: f64,
    },
    ShearQ {
        n: usize,
        axis: usize,
        eps: f64,
        form: ShearQForm,
    },
}

impl Lemma {
    pub const IDS: [&'static str; 5] = ["rotation", "scaling", "translation", "shear-h", "shear-q"];

    pub fn id(&self) -> &'static str {
        match self {
            Lemma::Rotation(_) => "rotation",
            Lemma::Scaling(_) => "scaling",
            Lemma::Translation(_) => "translation",
            Lemma::ShearH { .. } => "shear-h",
            Lemma::ShearQ { .. } => "shear-q",
        }
    }

    /// Ambient dimension `n + 1`.
    pub fn dim(&self) -> usize {
        match self {
            Lemma::Rotation(m) => m.len(),
            Lemma::Scaling(v) | Lemma::Translation(v) => v.len(),
            Lemma::ShearH { n, .. } | Lemma::ShearQ { n, .. } => n + 1,
        }
    }

    pub fn body_transform(&self) -> BodyTransform {
        match self {
            Lemma::Rotation(m) => BodyTransform::Rotation { matrix: m.clone() },
            Lemma::Scaling(k) => BodyTransform::Scaling { factors: k.clone() },
            Lemma::Translation(b) => BodyTransform::Translation { vector: b.clone() },
            Lemma::ShearH { n, axis, eps } => BodyTransform::CentroAffine {
                matrix: shear_h(*n, *axis, *eps),
            },
            Lemma::ShearQ { n, axis, eps, .. } => BodyTransform::CentroAffine {
                matrix: centro_affine_q(*n, *axis, *eps),
            },
        }
    }

    /// Normal `X` of the original body matching the normal `Y` of the image.
    pub fn preimage_normal(&self, y: &SpherePoint) -> Result<SpherePoint> {
        match self.body_transform().linear() {
            None => Ok(y.clone()),
            Some(m) => SpherePoint::normalized(&matvec(&transpose(&m), y.coords())),
        }
    }
}

/// Closed-form `q(Y)` given `h = h(X)` at the preimage normal.
pub fn support_transform(lemma: &Lemma, h: f64, y: &SpherePoint) -> Result<f64> {
    let yv = y.coords();
    if yv.len() != lemma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "direction of length {} for R^{}",
            yv.len(),
            lemma.dim()
        )));
    }
    let q = match lemma {
        Lemma::Rotation(_) => h,
        Lemma::Scaling(k) => {
            h * k
                .iter()
                .zip(yv)
                .map(|(k, v)| k * k * v * v)
                .sum::<f64>()
                .sqrt()
        }
        Lemma::Translation(b) => h + b.iter().zip(yv).map(|(b, v)| b * v).sum::<f64>(),
        Lemma::ShearH { n, axis, eps } => {
            let (yi, yl) = (yv[*axis], yv[*n]);
            h * (1.0 + 2.0 * eps * yi * yl + eps * eps * yl * yl).sqrt()
        }
        Lemma::ShearQ { n, axis, eps, form } => {
            let (yi, yl) = (yv[*axis], yv[*n]);
            let tail = match form {
                ShearQForm::CrossAxis => yi * yi,
                ShearQForm::PolarAxis => yl * yl,
            };
            h * (1.0 - 2.0 * eps * yi * yl + eps * eps * tail).sqrt()
        }
    };
    Ok(q)
}
