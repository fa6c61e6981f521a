use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::MetadataError;
use crate::image::ImageError;
use crate::metrics::MetricError;
use crate::predictions::PredictionError;
use crate::registry::RegistryError;
use crate::report::ReferenceError;
use crate::runner::RunError;

/// Any failure of a CLI command. Each family maps to its own exit status.
///
/// | code | family |
/// |-----:|--------|
/// | 2 | usage (bad flags or arguments) |
/// | 3 | metadata |
/// | 4 | dataset validation or model/dataset incompatibility |
/// | 5 | registry |
/// | 6 | model run |
/// | 7 | predictions |
/// | 8 | metrics |
/// | 9 | images |
/// | 10 | other file system errors and malformed reference tables |
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Metadata(#[from] MetadataError),
    #[error("dataset validation failed:\n{0}")]
    Validation(String),
    #[error("{0}")]
    Incompatible(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Prediction(#[from] PredictionError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Metadata(_) => 3,
            Error::Validation(_) | Error::Incompatible(_) => 4,
            Error::Registry(_) => 5,
            Error::Run(_) => 6,
            Error::Prediction(_) => 7,
            Error::Metric(_) => 8,
            Error::Image(_) => 9,
            Error::Reference(_) | Error::Io { .. } => 10,
        }
    }

    /// Short machine-readable family name, printed with the exit code.
    pub fn family(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::Metadata(_) => "metadata",
            Error::Validation(_) => "validation",
            Error::Incompatible(_) => "incompatible",
            Error::Registry(_) => "registry",
            Error::Run(_) => "run",
            Error::Prediction(_) => "prediction",
            Error::Metric(_) => "metric",
            Error::Image(_) => "image",
            Error::Reference(_) => "reference",
            Error::Io { .. } => "io",
        }
    }
}

pub(crate) fn io_at(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
