//! Reference-triangle Lagrange bases (degrees 1 to 4) and quadrature.

mod basis;
mod quadrature;

use thiserror::Error;

pub use basis::{lagrange, BasisTable, LagrangeBasis, MAX_DEGREE};
pub(crate) use quadrature::cached_triangle_rule;
pub use quadrature::{
    edge_rule, gauss_legendre, triangle_rule, QuadratureRule, MAX_EDGE_DEGREE, MAX_TRIANGLE_DEGREE,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ElementError {
    #[error("unsupported polynomial degree {0}")]
    UnsupportedDegree(usize),
    #[error("no quadrature rule of degree {0}")]
    UnsupportedQuadrature(usize),
}

/// Evaluates the basis of degree `degree` at a reference point.
pub fn shape_eval(degree: usize, p: crate::mesh::Point) -> Result<BasisTable, ElementError> {
    Ok(lagrange(degree)?.eval(p))
}
