use thiserror::Error;

/// Errors raised by the multiresolution library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cube {0} lies outside the grid domain")]
    Domain(String),
    #[error("level {requested} exceeds grid resolution {finest}")]
    Resolution { requested: u32, finest: u32 },
    #[error("point lies on a dyadic breakpoint: {0}")]
    Boundary(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("malformed record: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
