use std::path::PathBuf;

use finflow_core::dataset::DatasetError;
use finflow_core::evaluation::EvalError;
use finflow_core::market::MarketError;
use finflow_core::meanflow::MeanFlowError;
use finflow_core::noise_rl::NoiseRlError;
use finflow_core::numerics::NumericsError;
use finflow_core::strategy::StrategyError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    MeanFlow(#[from] MeanFlowError),
    #[error(transparent)]
    NoiseRl(#[from] NoiseRlError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable short name used in the one-line error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Io { .. } => "io",
            Self::Format { .. } => "format",
            Self::Config(_) => "config",
            Self::Dataset(_) => "dataset",
            Self::Eval(_) => "eval",
            Self::Market(_) => "market",
            Self::MeanFlow(_) => "meanflow",
            Self::NoiseRl(_) => "rl",
            Self::Numerics(_) => "numerics",
            Self::Strategy(_) => "strategy",
            Self::Csv(_) => "csv",
            Self::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Self::Format { path: path.into(), reason: reason.into() }
    }
}
