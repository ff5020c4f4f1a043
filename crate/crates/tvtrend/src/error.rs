use tvtrend_core::Error as CoreError;

/// Failures surfaced by the command line, each with a fixed exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{source_name}:{line}: {message}")]
    Input {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {error}")]
    Io {
        path: String,
        error: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{0}")]
    Numerical(String),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    /// 1 verification failure, 2 usage or input error, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Verification(_) => 1,
            Self::Usage(_) | Self::Input { .. } | Self::Io { .. } => 2,
            Self::Numerical(_) | Self::Core(CoreError::Singular) => 3,
            Self::Core(_) => 2,
        }
    }

    pub fn io(path: impl Into<String>, error: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            error,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
