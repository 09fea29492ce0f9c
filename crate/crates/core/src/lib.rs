//! Lower bounds for polynomial optimization from sums of nonnegative circuit
//! polynomials, computed by geometric programming.

pub mod circuit;
pub mod constrained;
pub mod cover;
pub mod error;
pub mod geometry;
pub mod gp;
pub mod linalg;
pub mod oracle;
pub mod polynomial;
mod program;
pub mod unconstrained;

pub use error::{Result, SoncError};
pub use polynomial::{Exponent, Polynomial, Term};
