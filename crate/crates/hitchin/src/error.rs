use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("no convergence: {what} (last residual {residual:e})")]
    Convergence { what: String, residual: f64 },
    #[error("degenerate plane: gram determinant {0:e}")]
    DegeneratePlane(f64),
    #[error("singular factorization at pivot {0}")]
    Singular(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
