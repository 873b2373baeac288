//! Random-matrix workbench: Monte Carlo ensembles, equilibrium densities,
//! orthogonal polynomials, Fredholm determinants, map enumeration, topological
//! recursion and angular integrals.

pub mod error;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
pub use model::{series_newton, FormalScalar, Potential, Scalar, ScalarKind};
pub mod linalg;
pub mod quad;
pub mod stats;
pub mod sampling;
pub mod saddle;
pub mod ortho;
pub mod fredholm;
pub mod maps;
pub mod laurent;
pub mod toprec;
pub mod angular;
