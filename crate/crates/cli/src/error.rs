use std::path::Path;

use thiserror::Error;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed inputs, invalid configuration.
    #[error("{0}")]
    Input(String),

    /// Solver or sampler failures on otherwise valid inputs.
    #[error("{0}")]
    Numerical(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Input(_) | CliError::Io { .. } => EXIT_INPUT,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            context: path.display().to_string(),
            source,
        }
    }

    /// Attaches the offending input to a library error.
    pub fn at(origin: &str, err: fcgrasp::Error) -> Self {
        match CliError::from(err) {
            CliError::Input(m) => CliError::Input(format!("{origin}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{origin}: {m}")),
            other => other,
        }
    }
}

impl From<fcgrasp::Error> for CliError {
    fn from(err: fcgrasp::Error) -> Self {
        use fcgrasp::Error as E;
        match err {
            E::NonConvergent { .. } | E::SamplingExhausted { .. } | E::LpFailure(_) => {
                CliError::Numerical(err.to_string())
            }
            _ => CliError::Input(err.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Input(format!("csv: {err}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
