//! Numerical calculus on graded nilpotent groups: BCH group laws,
//! homogeneous distances, pointwise degree of submanifolds, spherical
//! factors and Monte Carlo estimators for Federer densities and
//! intrinsic measures.

pub mod algebra;
pub mod error;
pub mod exterior;
pub mod expr;
pub mod manifold;
pub mod measure;
pub mod metrics;
pub mod numeric;
pub mod sampling;

pub use algebra::{GradedGroup, GroupDefinition, Point, Subspace, SubspaceClass};
pub use error::{Error, Result};
pub use numeric::Policy;
