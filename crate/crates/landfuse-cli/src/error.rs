//! Toolkit error type with the exit-code taxonomy: 1 usage, 2 data,
//! 3 numeric failure.

use thiserror::Error;

use landfuse_core::classify::TrainError;
use landfuse_core::kpca::KpcaError;
use landfuse_core::linalg::LinalgError;
use landfuse_core::metrics::MetricsError;
use landfuse_core::raster::RasterError;
use landfuse_core::register::RegisterError;
use landfuse_core::scene::SceneError;
use landfuse_core::tin::TinError;
use landfuse_core::tos::TosError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        CliError::Numeric(msg.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<RasterError> for CliError {
    fn from(e: RasterError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<RegisterError> for CliError {
    fn from(e: RegisterError) -> Self {
        match e {
            RegisterError::Degenerate | RegisterError::NotInvertible => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<TinError> for CliError {
    fn from(e: TinError) -> Self {
        match e {
            TinError::NotDelaunay(_) | TinError::BadCoverage => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<KpcaError> for CliError {
    fn from(e: KpcaError) -> Self {
        match e {
            KpcaError::DegenerateSamples
            | KpcaError::NonFiniteKernel
            | KpcaError::Eigen(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<TosError> for CliError {
    fn from(e: TosError) -> Self {
        match e {
            TosError::Internal(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Solve(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
