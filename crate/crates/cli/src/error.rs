use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad flags or configuration; exit status 1.
    #[error("{0}")]
    Usage(String),
    /// One or more runs failed; exit status 2.
    #[error("{0}")]
    Run(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] adbo::Error),
}

impl HarnessError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 1,
            _ => 2,
        }
    }
}
