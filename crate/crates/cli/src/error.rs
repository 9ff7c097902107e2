use std::fmt;
use std::path::Path;

use serde::Serialize;
use weyl_core::LabError;

/// A failure with its process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Format(String),
    Domain(String),
    Resource(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Format(_) => 3,
            CliError::Domain(_) => 4,
            CliError::Resource(_) => 5,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Format(_) => "format",
            CliError::Domain(_) => "domain",
            CliError::Resource(_) => "resource",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Format(m) | CliError::Domain(m) | CliError::Resource(m) => m,
        }
    }

    /// A missing or unreadable input violates a precondition.
    pub fn read(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Domain(format!("cannot read {}: {e}", path.display()))
    }

    pub fn write(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Resource(format!("cannot write {}: {e}", path.display()))
    }

    /// One JSON line for stderr.
    pub fn to_json_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'a str,
            code: i32,
            message: &'a str,
        }
        serde_json::to_string(&Line {
            error: self.kind(),
            code: self.code(),
            message: self.message(),
        })
        .expect("error line serializes")
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Domain(m) | LabError::Shape(m) | LabError::Numeric(m) => CliError::Domain(m),
            LabError::Format(m) => CliError::Format(m),
            LabError::Resource(m) => CliError::Resource(m),
            LabError::Io(e) => CliError::Resource(e.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}
