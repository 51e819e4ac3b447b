use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFICATION_FAILED: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const INVALID_SCENE: i32 = 3;
    pub const GUARD: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("{0}")]
    Guard(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Io { .. } => exit::PARSE,
            CliError::InvalidScene(_) => exit::INVALID_SCENE,
            CliError::Guard(_) => exit::GUARD,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<hypertess::decompose::DecomposeError> for CliError {
    fn from(e: hypertess::decompose::DecomposeError) -> Self {
        use hypertess::decompose::DecomposeError as D;
        match e {
            D::LemmaViolation { .. } | D::NonterminatingGuard { .. } | D::LeafNotTT { .. } => {
                CliError::Guard(e.to_string())
            }
            other => CliError::InvalidScene(other.to_string()),
        }
    }
}

impl From<hypertess::volume::VolumeError> for CliError {
    fn from(e: hypertess::volume::VolumeError) -> Self {
        CliError::InvalidScene(e.to_string())
    }
}
