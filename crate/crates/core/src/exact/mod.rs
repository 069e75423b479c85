//! Exact arithmetic: rationals, sparse multivariate polynomials over a
//! variable table, and rational linear algebra.

mod matrix;
mod mpoly;
mod rat;
mod vartable;

pub use matrix::{nullspace, RatMatrix};
pub use mpoly::{mpoly_arith, ArithOp, MPoly, Monomial};
pub use rat::{fmt_rat, int, parse_rat, primitive_integer_vector, rat, to_f64, Rat};
pub use vartable::{VarId, VarRole, VarTable};
