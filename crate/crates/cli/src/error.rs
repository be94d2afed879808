use std::fmt;

/// Failures surfaced by the command layer, each with its process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad scenario, flag or path.
    Config(String),
    /// A numerical-consistency check in the core failed.
    Numerical(String),
    /// `compare` exceeded its `--tolerance`.
    Tolerance { max_deviation: f64, tolerance: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Tolerance { .. } => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::Tolerance { max_deviation, tolerance } => {
                write!(f, "max relative deviation {max_deviation:.3e} exceeds tolerance {tolerance:.3e}")
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<omx_core::Error> for CliError {
    fn from(e: omx_core::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
