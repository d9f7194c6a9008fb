use std::path::Path;

use causal_classify::Error;

/// Failures mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad input or configuration: exit 2.
    Usage(String),
    Io(String),
    Lib(Error),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> CliError {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Lib(e) => match e {
                Error::EmptyArm { .. } | Error::EmptyControl | Error::TooFewSamples { .. } => 3,
                _ => 2,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}
