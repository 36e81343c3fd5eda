use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("source and observation points coincide")]
    CoincidentPoints,

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("evaluation point lies {distance:.3e} from the source support, minimum is {min:.3e}")]
    Proximity { distance: f64, min: f64 },

    #[error("integrand is not finite at quadrature node {index}")]
    NonFinite { index: usize },

    #[error("insufficient regularity: {0}")]
    InsufficientRegularity(String),

    #[error("frequency |xi| = {norm} is off the wavenumber sphere |xi| = {kappa}")]
    OffSphere { norm: f64, kappa: f64 },

    #[error("missing coefficient family: {0}")]
    MissingCoefficients(&'static str),

    #[error("invalid source descriptor: {0}")]
    Descriptor(String),
}

pub type Result<T> = std::result::Result<T, Error>;
