use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}, expected 2 or 3")]
    Dimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Jacobian of the domain map is singular or orientation-reversing at x = {point:?} (det J = {det})")]
    SingularJacobian { point: Vec<f64>, det: f64 },

    #[error("non-finite {what} at ball point {point:?}")]
    NonFinite { what: &'static str, point: Vec<f64> },

    #[error("coefficient vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("boundary condition {0} is not supported by this operation")]
    BoundaryCondition(&'static str),

    #[error("Dirichlet extension does not provide L applied to G")]
    MissingExtensionDerivatives,

    #[error("boundary data inconsistent: {0}")]
    InconsistentData(String),

    #[error("Neumann problems require min gamma > 0, found {0}")]
    NonPositiveGamma(f64),

    #[error("linear system is singular")]
    SingularMatrix,

    #[error("mismatched solution descriptors: {0}")]
    Mismatch(String),
}
