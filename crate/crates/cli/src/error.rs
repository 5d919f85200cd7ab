use std::fmt::Display;
use std::path::{Path, PathBuf};

use thiserror::Error;

use afindex_core::analytics::AnalyticsError;
use afindex_core::catalog::CatalogError;
use afindex_core::econ::EconError;
use afindex_core::embedder::EmbedError;
use afindex_core::index::IndexError;
use afindex_core::survey::SurveyError;
use afindex_core::timeseries::SeriesError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing {path}; run `afindex {command}` first")]
    Dependency {
        command: &'static str,
        path: PathBuf,
    },
    #[error("data: {0}")]
    Data(String),
    #[error("embedding provider: {0}")]
    Provider(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Dependency { .. } => 3,
            Self::Data(_) => 4,
            Self::Provider(_) | Self::Io { .. } => 1,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn data(path: &Path, e: impl Display) -> Self {
        Self::Data(format!("{}: {e}", path.display()))
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::Io { path, source } => Self::Io { path, source },
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::Provider(m) => Self::Provider(m),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<EconError> for CliError {
    fn from(e: EconError) -> Self {
        match e {
            EconError::UnknownColumn(_)
            | EconError::FocusNotRegressor(_)
            | EconError::DuplicateColumn(_) => Self::Config(e.to_string()),
            other => Self::Data(other.to_string()),
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::Data(e.to_string())
            }
        })*
    };
}

data_error!(IndexError, SeriesError, AnalyticsError, SurveyError);
