use std::path::{Path, PathBuf};

/// Failures of the command line, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Exit code 2.
    #[error("config error: {0}")]
    Config(String),

    /// Exit code 3.
    #[error("data error: {0}")]
    Data(String),

    /// Exit code 1.
    #[error("{0}")]
    Runtime(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        source: wrse_core::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Runtime(_) | CliError::Io { .. } => 1,
            CliError::Core { source, .. } => core_exit_code(source),
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn core_exit_code(e: &wrse_core::Error) -> i32 {
    use wrse_core::Error as E;
    match e {
        E::InvalidConfig(_) => 2,
        E::InvalidData(_) | E::ScenarioMismatch(_) | E::DimensionMismatch { .. } => 3,
        E::Horizon { source, .. } => core_exit_code(source),
        _ => 1,
    }
}

/// Attaches a location (split, model, file) to core errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for Result<T, wrse_core::Error> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|source| CliError::Core {
            context: what(),
            source,
        })
    }
}
