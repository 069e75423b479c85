//! Chart geometry of the southern hemisphere, closed-form test fields and
//! residuals of the sphere and plane equations.

mod chart;
mod field;
mod jet;
mod residual;

pub use chart::{
    christoffel_fd, metric_at, metric_from_embedding, project, unproject, MetricData, SpherePoint,
};
pub use field::{
    jet_weight, projective_from_support, support_from_projective, ConstantField, EllipsoidField,
    FieldDescriptor, ProjectiveFromSupport, QuadraticField, ScalarField, SharedField, SumField,
    SupportFromProjective,
};
pub use jet::Jet2;
pub use residual::{residual_plane, residual_sphere, sphere_hessian};

use crate::error::{Error, Result};

/// Default sampling radius of the chart.
pub const DEFAULT_RADIUS: f64 = 10.0;

/// `1 + |x|^2`.
pub fn weight(x: &[f64]) -> f64 {
    1.0 + x.iter().map(|v| v * v).sum::<f64>()
}

/// Right-hand side `(1+|x|^2)^{-(p+n+1)/2} u^{p-1}` for `u > 0`.
pub fn plane_rhs(p: f64, x: &[f64], u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::PositivityViolated(u));
    }
    let n = x.len() as f64;
    Ok((-(p + n + 1.0) / 2.0 * weight(x).ln() + (p - 1.0) * u.ln()).exp())
}
