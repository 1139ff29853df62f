use std::path::PathBuf;

use zonerisk_core::ErrorKind;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        #[source]
        source: zonerisk_core::Error,
    },
    #[error(transparent)]
    Core(#[from] zonerisk_core::Error),
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("missing {}; run `zonerisk {stage}` first", path.display())]
    MissingPrerequisite { path: PathBuf, stage: &'static str },
    #[error("{} was produced from different upstream outputs; rerun `zonerisk {stage}`", path.display())]
    Stale { path: PathBuf, stage: &'static str },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        let core = match self {
            CliError::Input { source, .. } => Some(source),
            CliError::Core(e) => Some(e),
            _ => None,
        };
        match core.map(zonerisk_core::Error::kind) {
            Some(ErrorKind::Numerical) => 3,
            _ => 2,
        }
    }
}

pub trait WithPath<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> WithPath<T> for zonerisk_core::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| CliError::Input {
            path: path.into(),
            source,
        })
    }
}
