use std::path::PathBuf;

use ringmode_core::ErrorKind;

/// Problems with a scenario description, reported before anything runs.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{}: {message}", path.display())]
    Syntax { path: PathBuf, message: String },

    #[error("{}{field}: {reason}", location(path, *line))]
    Field {
        path: Option<PathBuf>,
        line: Option<usize>,
        field: String,
        reason: String,
    },

    #[error("unknown preset `{0}` (available: paper-table1)")]
    UnknownPreset(String),
}

fn location(path: &Option<PathBuf>, line: Option<usize>) -> String {
    match (path, line) {
        (Some(p), Some(l)) => format!("{}:{l}: ", p.display()),
        (Some(p), None) => format!("{}: ", p.display()),
        (None, _) => String::new(),
    }
}

impl ConfigError {
    pub fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Field {
            path: None,
            line: None,
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Model(#[from] ringmode_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration problems, 3 for numerical divergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Model(e) => match (e.kind(), e) {
                (ErrorKind::Config, _) | (_, ringmode_core::Error::Degenerate { .. }) => 2,
                (ErrorKind::Numerical, _) => 3,
                _ => 1,
            },
            _ => 1,
        }
    }
}
