use thiserror::Error;

/// Failure modes shared by every module of the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    /// A precondition on the mathematical inputs was violated.
    #[error("domain error: {0}")]
    Domain(String),
    /// Two objects that must share a grid or a length do not.
    #[error("shape error: {0}")]
    Shape(String),
    /// A configured resource cap (grid level, system size, exact-mode limit) was exceeded.
    #[error("resource error: {0}")]
    Resource(String),
    /// A file did not match the declared format.
    #[error("format error: {0}")]
    Format(String),
    /// A numerical routine broke down.
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Domain(msg.into()))
}

pub(crate) fn shape<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Shape(msg.into()))
}

pub(crate) fn resource<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Resource(msg.into()))
}
