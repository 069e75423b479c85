//! Numerical certification: transported solutions against the plane
//! equation, support-function identities against closed-form oracles, and
//! resolutions end to end.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::{
    matmul, matvec, o_matrix, resolve, support_transform, ActionParams, BodyTransform, GroupAction,
    Lemma, ShearQForm,
};
use crate::error::{Error, Result};
use crate::exact::{fmt_rat, int, Rat};
use crate::geometry::{
    residual_plane, unproject, weight, EllipsoidField, FieldDescriptor, ScalarField, SharedField,
    SpherePoint,
};

/// Max residual at or below which a transport is confirmed.
pub const CONFIRM_TOLERANCE: f64 = 1e-9;
/// Max deviation at or below which a support identity is confirmed.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
/// Max residual at or above which a check is refuted.
pub const REFUTE_THRESHOLD: f64 = 1e-3;
/// A base field must solve the equation to this accuracy.
pub const BASE_TOLERANCE: f64 = 1e-10;

/// Reproducible sample of chart points and sphere directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub n: usize,
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
}

impl SamplePlan {
    pub fn new(n: usize, radius: f64, samples: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPlan("n must be at least 1".into()));
        }
        if samples == 0 {
            return Err(Error::InvalidPlan("sample count must be at least 1".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidPlan(format!(
                "radius must be positive, got {radius}"
            )));
        }
        Ok(SamplePlan {
            n,
            radius,
            samples,
            seed,
        })
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn gaussian(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
            if v.iter().any(|a| *a != 0.0) {
                return v;
            }
        }
    }

    /// Points uniform in the ball of radius `radius` in `R^n`.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut rng = self.rng(0);
        (0..self.samples)
            .map(|_| {
                let g = Self::gaussian(&mut rng, self.n);
                let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
                let r = self.radius * rng.random::<f64>().powf(1.0 / self.n as f64);
                g.iter().map(|a| a * r / norm).collect()
            })
            .collect()
    }

    /// Seeded test ellipsoid `A B + c` with `A` near the identity and `c`
    /// small enough to keep the origin inside.
    pub fn body(&self) -> EllipsoidField {
        let mut rng = self.rng(2);
        let k = self.n + 1;
        let a: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        let r: f64 = rng.random_range(-1.0..1.0);
                        if i == j {
                            1.0 + 0.3 * r
                        } else {
                            0.5 * r / k as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let c = (0..k).map(|_| 0.1 * rng.random_range(-1.0..1.0)).collect();
        EllipsoidField::new(a, c).expect("diagonally dominant matrix")
    }

    /// Directions uniform on the unit sphere of `R^{n+1}`.
    pub fn directions(&self) -> Vec<SpherePoint> {
        let mut rng = self.rng(1);
        (0..self.samples)
            .map(|_| {
                SpherePoint::normalized(&Self::gaussian(&mut rng, self.n + 1))
                    .expect("nonzero sample")
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    SymmetryConfirmed,
    SymmetryRefuted,
    /// Between the two thresholds, or more than half the samples skipped.
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::SymmetryConfirmed => "symmetry-confirmed",
            Verdict::SymmetryRefuted => "symmetry-refuted",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `action`, `lemma` or `resolution`.
    pub check: String,
    pub subject: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub action: Option<ActionParams>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub params: BTreeMap<String, Vec<f64>>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub field: Option<FieldDescriptor>,
    pub samples: usize,
    pub evaluated: usize,
    pub skipped: usize,
    pub skip_fraction: f64,
    pub nonfinite: usize,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub tolerance: f64,
    pub refute_threshold: f64,
    pub verdict: Verdict,
}

impl ResidualReport {
    pub fn confirmed(&self) -> bool {
        self.verdict == Verdict::SymmetryConfirmed
    }

    pub fn refuted(&self) -> bool {
        self.verdict == Verdict::SymmetryRefuted
    }
}

struct Summary {
    evaluated: usize,
    skipped: usize,
    nonfinite: usize,
    max_abs: f64,
    mean_abs: f64,
}

fn summarize(values: &[Option<f64>]) -> Summary {
    let mut s = Summary {
        evaluated: 0,
        skipped: 0,
        nonfinite: 0,
        max_abs: 0.0,
        mean_abs: 0.0,
    };
    let mut total = 0.0;
    for v in values {
        match v {
            None => s.skipped += 1,
            Some(r) if !r.is_finite() => s.nonfinite += 1,
            Some(r) => {
                s.evaluated += 1;
                s.max_abs = s.max_abs.max(r.abs());
                total += r.abs();
            }
        }
    }
    if s.evaluated > 0 {
        s.mean_abs = total / s.evaluated as f64;
    }
    s
}

struct ReportHead {
    check: &'static str,
    subject: String,
    action: Option<ActionParams>,
    params: BTreeMap<String, Vec<f64>>,
    n: usize,
    p: Option<String>,
    field: Option<FieldDescriptor>,
    tolerance: f64,
}

fn finish(head: ReportHead, values: &[Option<f64>]) -> ResidualReport {
    let s = summarize(values);
    let samples = values.len();
    let skip_fraction = s.skipped as f64 / samples as f64;
    let verdict = if s.nonfinite > 0 {
        Verdict::SymmetryRefuted
    } else if skip_fraction > 0.5 || s.evaluated == 0 {
        Verdict::Inconclusive
    } else if s.max_abs <= head.tolerance {
        Verdict::SymmetryConfirmed
    } else if s.max_abs >= REFUTE_THRESHOLD {
        Verdict::SymmetryRefuted
    } else {
        Verdict::Inconclusive
    };
    ResidualReport {
        check: head.check.into(),
        subject: head.subject,
        action: head.action,
        params: head.params,
        n: head.n,
        p: head.p,
        field: head.field,
        samples,
        evaluated: s.evaluated,
        skipped: s.skipped,
        skip_fraction,
        nonfinite: s.nonfinite,
        max_abs: s.max_abs,
        mean_abs: s.mean_abs,
        tolerance: head.tolerance,
        refute_threshold: REFUTE_THRESHOLD,
        verdict,
    }
}

fn skippable(e: &Error) -> bool {
    matches!(e, Error::ActionUndefined | Error::PositivityViolated(_))
}

fn check_plan(plan: &SamplePlan, n: usize) -> Result<()> {
    if plan.n != n {
        return Err(Error::DimensionMismatch(format!(
            "plan for n = {} used with n = {n}",
            plan.n
        )));
    }
    Ok(())
}

/// Transports `u` under `a` and measures the plane residual of the image.
pub fn certify_action(
    a: &GroupAction,
    p: &Rat,
    u: SharedField,
    plan: &SamplePlan,
) -> Result<ResidualReport> {
    check_plan(plan, a.n())?;
    let points = plan.points();
    let base = points
        .par_iter()
        .map(|x| residual_plane(u.as_ref(), p, x).map(f64::abs))
        .collect::<Result<Vec<f64>>>()?;
    let worst = base.iter().copied().fold(0.0, f64::max);
    if !(worst <= BASE_TOLERANCE) {
        return Err(Error::BaseFieldFailsPde(worst));
    }
    let t = a.transport(u.clone())?;
    let values = points
        .par_iter()
        .map(|y| match residual_plane(t.as_ref(), p, y) {
            Ok(r) => Ok(Some(r.abs())),
            Err(e) if skippable(&e) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let head = ReportHead {
        check: "action",
        subject: a.id().into(),
        action: Some(a.params()),
        params: BTreeMap::new(),
        n: a.n(),
        p: Some(fmt_rat(p)),
        field: Some(u.descriptor()),
        tolerance: CONFIRM_TOLERANCE,
    };
    Ok(finish(head, &values))
}

fn lemma_params(lemma: &Lemma) -> BTreeMap<String, Vec<f64>> {
    let mut m = BTreeMap::new();
    match lemma {
        Lemma::Rotation(r) => {
            m.insert("matrix".into(), r.concat());
        }
        Lemma::Scaling(k) => {
            m.insert("factors".into(), k.clone());
        }
        Lemma::Translation(b) => {
            m.insert("vector".into(), b.clone());
        }
        Lemma::ShearH { axis, eps, .. } | Lemma::ShearQ { axis, eps, .. } => {
            m.insert("axis".into(), vec![*axis as f64]);
            m.insert("eps".into(), vec![*eps]);
        }
    }
    m
}

fn lemma_subject(lemma: &Lemma) -> String {
    match lemma {
        Lemma::ShearQ { form, .. } => format!("shear-q:{}", form_name(*form)),
        other => other.id().into(),
    }
}

pub fn form_name(form: ShearQForm) -> &'static str {
    match form {
        ShearQForm::CrossAxis => "cross-axis",
        ShearQForm::PolarAxis => "polar-axis",
    }
}

/// Compares a closed-form support identity with the support function of
/// the transformed ellipsoid computed directly.
pub fn certify_lemma(
    lemma: &Lemma,
    body: &EllipsoidField,
    plan: &SamplePlan,
) -> Result<ResidualReport> {
    let k = lemma.dim();
    if body.dim() + 1 != k {
        return Err(Error::DimensionMismatch(format!(
            "body in R^{} for a transform of R^{k}",
            body.dim() + 1
        )));
    }
    check_plan(plan, k - 1)?;
    let image = match lemma.body_transform() {
        BodyTransform::Translation { vector } => {
            let c = body
                .center()
                .iter()
                .zip(&vector)
                .map(|(a, b)| a + b)
                .collect();
            EllipsoidField::new(body.matrix().to_vec(), c)?
        }
        t => {
            let m = t.linear().expect("linear transform");
            EllipsoidField::new(matmul(&m, body.matrix()), matvec(&m, body.center()))?
        }
    };
    let values = plan
        .directions()
        .par_iter()
        .map(|y| {
            let x = lemma.preimage_normal(y)?;
            let q = support_transform(lemma, body.support(x.coords()), y)?;
            Ok(Some(q - image.support(y.coords())))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut params = lemma_params(lemma);
    params.insert("body.matrix".into(), body.matrix().concat());
    params.insert("body.center".into(), body.center().to_vec());
    let head = ReportHead {
        check: "lemma",
        subject: lemma_subject(lemma),
        action: None,
        params,
        n: k - 1,
        p: None,
        field: None,
        tolerance: IDENTITY_TOLERANCE,
    };
    Ok(finish(head, &values))
}

/// Support function of the transported projective field, `u/sqrt(1+|x|^2)`.
fn transported_support(
    a: &GroupAction,
    body: &EllipsoidField,
    plan: &SamplePlan,
) -> Result<Vec<Option<(f64, Vec<f64>)>>> {
    let t = a.transport(Arc::new(body.clone()))?;
    plan.points()
        .par_iter()
        .map(|x| match t.value(x) {
            Ok(v) => Ok(Some((v / weight(x).sqrt(), unproject(x).coords().to_vec()))),
            Err(e) if skippable(&e) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// End-to-end check of an arbitrary list of body transforms against the
/// transport of `body` under `a`.
pub fn certify_transforms(
    a: &GroupAction,
    transforms: &[BodyTransform],
    body: &EllipsoidField,
    plan: &SamplePlan,
) -> Result<ResidualReport> {
    check_plan(plan, a.n())?;
    let base = |z: &[f64]| body.support(z);
    let values: Vec<Option<f64>> = transported_support(a, body, plan)?
        .into_iter()
        .map(|s| s.map(|(h, y)| h - crate::actions::support_through(transforms, &base, &y)))
        .collect();
    let mut params = BTreeMap::new();
    for (i, t) in transforms.iter().enumerate() {
        let key = format!("{i}.{}", t.kind());
        let v = match t {
            BodyTransform::Rotation { matrix } | BodyTransform::CentroAffine { matrix } => {
                matrix.concat()
            }
            BodyTransform::Scaling { factors } => factors.clone(),
            BodyTransform::Translation { vector } => vector.clone(),
        };
        params.insert(key, v);
    }
    let head = ReportHead {
        check: "resolution",
        subject: a.id().into(),
        action: Some(a.params()),
        params,
        n: a.n(),
        p: None,
        field: Some(body.descriptor()),
        tolerance: IDENTITY_TOLERANCE,
    };
    Ok(finish(head, &values))
}

/// Checks `resolve(a)` against the transported support function.
pub fn certify_resolution(
    a: &GroupAction,
    body: &EllipsoidField,
    plan: &SamplePlan,
) -> Result<ResidualReport> {
    certify_transforms(a, &resolve(a)?, body, plan)
}

/// Outcome of testing both candidate `Q_eps` identities against the
/// transported unit ball under g9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearQAdjudication {
    pub cross_axis: ResidualReport,
    pub polar_axis: ResidualReport,
    pub implemented: ShearQForm,
    /// `cross-axis`, `polar-axis` or `undecided`.
    pub winner: String,
}

impl ShearQAdjudication {
    pub fn definitive(&self) -> bool {
        self.winner != "undecided"
    }
}

pub fn adjudicate_shear_q(axis: usize, eps: f64, plan: &SamplePlan) -> Result<ShearQAdjudication> {
    let n = plan.n;
    let a = GroupAction::centro_projective(n, axis, eps)?;
    let body = EllipsoidField::unit_ball(n);
    let sampled = transported_support(&a, &body, plan)?;
    let report = |form: ShearQForm| -> Result<ResidualReport> {
        let lemma = Lemma::ShearQ { n, axis, eps, form };
        let values = sampled
            .iter()
            .map(|s| match s {
                None => Ok(None),
                Some((h, y)) => Ok(Some(
                    h - support_transform(&lemma, 1.0, &SpherePoint::new(y.clone())?)?,
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        let head = ReportHead {
            check: "resolution",
            subject: format!("g9:shear-q:{}", form_name(form)),
            action: Some(a.params()),
            params: lemma_params(&lemma),
            n,
            p: None,
            field: Some(body.descriptor()),
            tolerance: IDENTITY_TOLERANCE,
        };
        Ok(finish(head, &values))
    };
    let (cross_axis, polar_axis) = (
        report(ShearQForm::CrossAxis)?,
        report(ShearQForm::PolarAxis)?,
    );
    let winner = match (cross_axis.verdict, polar_axis.verdict) {
        (Verdict::SymmetryConfirmed, Verdict::SymmetryRefuted) => "cross-axis",
        (Verdict::SymmetryRefuted, Verdict::SymmetryConfirmed) => "polar-axis",
        _ => "undecided",
    };
    Ok(ShearQAdjudication {
        cross_axis,
        polar_axis,
        implemented: ShearQForm::CrossAxis,
        winner: winner.into(),
    })
}

/// Whether the action `id` is among the symmetries listed for exponent `p`.
pub fn listed_symmetry(id: &str, n: usize, p: &Rat) -> bool {
    let n = n as i64;
    match id {
        "g1" | "g3" => true,
        "g2" => *p == int(n + 1),
        "g4" | "g5" => *p == int(1),
        "g6" | "g7" | "g8" | "g9" => *p == int(-n - 1),
        _ => false,
    }
}

pub const ACTION_IDS: [&str; 9] = ["g1", "g2", "g3", "g4", "g5", "g6", "g7", "g8", "g9"];

/// Default parameter of each action in the certification suite.
pub fn default_eps(id: &str) -> f64 {
    match id {
        "g1" => 0.7,
        "g2" => 2.0,
        "g3" => 0.3,
        "g4" | "g5" => 0.5,
        "g6" => 2f64.ln(),
        "g7" => 0.4,
        "g8" | "g9" => 0.2,
        _ => 0.0,
    }
}

/// A solution other than the round ball at the exceptional exponents.
pub fn non_round_solution(n: usize, p: &Rat) -> Option<EllipsoidField> {
    let n_i = n as i64;
    if *p == int(n_i + 1) {
        Some(EllipsoidField::scaled_ball(n, 1.5))
    } else if *p == int(1) {
        let b = (0..=n).map(|i| 0.3 * (-0.5f64).powi(i as i32)).collect();
        Some(EllipsoidField::translated_ball(b))
    } else if *p == int(-n_i - 1) {
        let mut d = crate::actions::identity(n + 1);
        d[0][0] = 1.25;
        d[1][1] = 0.8;
        EllipsoidField::new(matmul(&d, &o_matrix(n, 0, 0.4)), vec![0.0; n + 1]).ok()
    } else {
        None
    }
}

/// One (action, exponent, field) case with its expected verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCase {
    pub expected: Verdict,
    pub report: ResidualReport,
}

impl SuiteCase {
    pub fn passed(&self) -> bool {
        self.report.verdict == self.expected
    }
}

/// Positive controls for every listed pair (round ball and, where one
/// exists, a non-round solution) and negative controls on the round ball
/// for every unlisted pair, over the exponents `n+1, 1, -n-1, n+2`.
pub fn soundness_suite(plan: &SamplePlan) -> Result<Vec<SuiteCase>> {
    let n = plan.n;
    let n_i = n as i64;
    let mut cases = Vec::new();
    for p in [int(n_i + 1), int(1), int(-n_i - 1), int(n_i + 2)] {
        for id in ACTION_IDS {
            // SO(1) and SL(1) are trivial
            if n == 1 && (id == "g1" || id == "g6") {
                continue;
            }
            let a = GroupAction::from_id(id, n, 0, default_eps(id), None)?;
            let round: SharedField = Arc::new(EllipsoidField::unit_ball(n));
            if listed_symmetry(id, n, &p) {
                cases.push(SuiteCase {
                    expected: Verdict::SymmetryConfirmed,
                    report: certify_action(&a, &p, round, plan)?,
                });
                if let Some(body) = non_round_solution(n, &p) {
                    let report = certify_action(&a, &p, Arc::new(body), plan)?;
                    cases.push(SuiteCase {
                        expected: Verdict::SymmetryConfirmed,
                        report,
                    });
                }
            } else {
                cases.push(SuiteCase {
                    expected: Verdict::SymmetryRefuted,
                    report: certify_action(&a, &p, round, plan)?,
                });
            }
        }
    }
    Ok(cases)
}
