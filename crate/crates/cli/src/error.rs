use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },

    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },

    #[error("invalid scenario field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("unknown built-in `{0}`")]
    UnknownBuiltin(String),

    #[error(transparent)]
    Core(#[from] mwc_core::Error),
}

impl CliError {
    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
