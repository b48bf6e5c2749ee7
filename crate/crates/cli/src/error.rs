use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
    /// Training ran its budget without reaching the threshold.
    #[error("training did not reach the fidelity threshold (best {fidelity:.4})")]
    Unsuccessful { fidelity: f64 },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Unsuccessful { .. } => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<qrlcs_core::Error> for CliError {
    fn from(e: qrlcs_core::Error) -> Self {
        use qrlcs_core::Error as E;
        match e {
            E::Validation(_) | E::SizeCap { .. } | E::Unsupported(_) | E::Json(_) => {
                CliError::Validation(e.to_string())
            }
            E::Numerical(_) => CliError::Numerical(e.to_string()),
            E::Io(_) => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}
