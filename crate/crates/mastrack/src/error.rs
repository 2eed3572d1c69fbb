use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    /// Malformed content at a known place in a file.
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },
    #[error(transparent)]
    Core(#[from] mastrack_core::Error),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Process exit status: 3 for unreadable or unwritable files, 2 for
    /// everything the user has to fix in the input.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Io { .. } => 3,
            Error::Image {
                source: image::ImageError::IoError(_),
                ..
            } => 3,
            _ => 2,
        }
    }

    /// Wraps a csv error, keeping the line number when the reader knows it.
    pub(crate) fn csv(path: impl Into<PathBuf>, e: csv::Error) -> Self {
        let path = path.into();
        let line = e.position().map(|p| p.line());
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io { path, source },
            kind => {
                let msg = match kind {
                    csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                    csv::ErrorKind::UnequalLengths {
                        expected_len, len, ..
                    } => {
                        format!("expected {expected_len} fields, found {len}")
                    }
                    csv::ErrorKind::Utf8 { err, .. } => err.to_string(),
                    other => format!("{other:?}"),
                };
                Error::Parse {
                    path,
                    line: line.unwrap_or(0),
                    msg,
                }
            }
        }
    }
}
