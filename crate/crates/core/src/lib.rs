//! Symbolic engine for rank-2 distributions and class-one PDE systems in
//! two independent variables.

pub mod error;
pub mod expr;
pub mod geom;
pub mod jets;
pub mod linalg;
pub mod pipeline;

pub use error::{Error, ErrorClass, Result};
pub use expr::{Expr, SamplerConfig};
pub use rug::Rational;
