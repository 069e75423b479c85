use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("incompatible variable tables")]
    IncompatibleTables,
    #[error("unknown variable: {0}")]
    UnknownVariable(String),
    #[error("duplicate variable name: {0}")]
    DuplicateVariable(String),
    #[error("invalid rational literal: {0:?}")]
    InvalidRational(String),
    #[error("polynomial parse error: {0}")]
    Parse(String),
    #[error("invalid dimension n = {0} (need n >= 1)")]
    InvalidDimension(usize),
    #[error("ansatz degree {0} is too small: degree >= 2 is needed to contain the projective generators")]
    AnsatzTooSmall(usize),
    #[error("constraint is not linear in the unknown coefficients")]
    NonlinearInUnknowns,
    #[error("cofactor reduction left unreduced second-derivative terms")]
    ReductionIncomplete,
    #[error("off-manifold sample: det hess = {det}, expected {expected}")]
    OffManifold { det: f64, expected: f64 },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("not special linear: det = {0}")]
    NotSpecialLinear(f64),
    #[error("singular matrix")]
    Singular,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("outside southern chart")]
    OutsideChart,
    #[error("positivity violated: value {0}")]
    PositivityViolated(f64),
    #[error("action undefined at point")]
    ActionUndefined,
    #[error("invalid action parameter: {0}")]
    InvalidParameter(String),
    #[error("base field fails PDE: max residual {0:e}")]
    BaseFieldFailsPde(f64),
    #[error("invalid sample plan: {0}")]
    InvalidPlan(String),
}

pub type Result<T> = std::result::Result<T, Error>;
