use thiserror::Error;

/// Failures of a lab command, each tied to a process exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("numerical guard tripped: {0}")]
    Numerical(String),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 1,
            LabError::Check(_) => 2,
            LabError::Numerical(_) => 3,
        }
    }
}

impl From<nls_core::Error> for LabError {
    fn from(e: nls_core::Error) -> Self {
        use nls_core::Error as E;
        match e {
            E::Resource(_) | E::Aliasing { .. } | E::Divergence(_) => LabError::Numerical(e.to_string()),
            _ => LabError::Config(e.to_string()),
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;
