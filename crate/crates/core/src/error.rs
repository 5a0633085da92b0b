use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quadrature order {0} is outside the supported range [2, {max}]", max = crate::quadrature::MAX_ORDER)]
    QuadratureOrder(usize),
    #[error("non-finite sample {value} at node ({y1}, {y2})")]
    NonFiniteSample { y1: f64, y2: f64, value: f64 },
    #[error("projection cap {0} exceeds 12")]
    ProjectionCap(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point ({0}, {1}) lies outside the domain")]
    OutsideDomain(f64, f64),
    #[error("touchdown: P + eps = {0} is not positive")]
    Touchdown(f64),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("stencil out of range: {0}")]
    Stencil(String),
    #[error("snapshot store: {0}")]
    Snapshot(String),
}

pub type Result<T> = std::result::Result<T, Error>;
