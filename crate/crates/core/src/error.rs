use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("scalar ring mismatch: potential is {potential}, argument is {argument}")]
    RingMismatch {
        potential: &'static str,
        argument: &'static str,
    },
    #[error("series has no inverse: constant term is zero")]
    NotInvertible,
    #[error("series has no square root: constant term {0} is not a positive rational square")]
    NoSquareRoot(String),
    #[error("derivative vanishes at order 0; series Newton cannot proceed")]
    SingularDerivative,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("negative equilibrium density {value:e} at x = {x}; the one-cut ansatz is invalid")]
    NegativeDensity { x: f64, value: f64 },
    #[error("depth exceeded: {0}")]
    DepthExceeded(String),
    #[error("size cap exceeded: {0}")]
    CapExceeded(String),
}

pub type Result<T> = std::result::Result<T, Error>;
