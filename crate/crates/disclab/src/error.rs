use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {modulus} lies outside the open unit disc")]
    OutsideDisc { modulus: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("zero of the function on the integration circle r = {radius}")]
    ZeroOnCircle { radius: f64 },
    #[error("integral means decrease from {before} to {after}; quadrature too coarse")]
    NonMonotoneMeans { before: f64, after: f64 },
    #[error("hat weight vanishes at r = {0}")]
    VanishingTail(f64),
    #[error("kernel quantity {x_b} is not below 1/4; the Bloch bound does not apply")]
    BoundNotApplicable { x_b: f64 },
    #[error("derivative vanishes at a grid point of radius {radius}")]
    VanishingDerivative { radius: f64 },
    #[error("function is not zero-free on the grid (winding number {winding})")]
    NotZeroFree { winding: i64 },
    #[error("gap ratio {0} is not larger than 1")]
    NotLacunary(f64),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
