//! Batch orchestration: TOML run configs, the backtest pipeline
//! (ingest, factors, strategy, environment, metrics) and report emission.

mod config;
mod data;
mod report;
mod run;

use std::path::{Path, PathBuf};

pub use config::{load_config, DataSource, EnvSection, FactorConfig, RunConfig, SplitConfig};
pub use data::{load_news, load_series, LoadedSeries};
pub use report::{
    emit_report, metrics_from_ledger, write_atomic, EpisodeResult, LedgerKind, RunReport, SeriesPoint, REPORT_FILE,
};
pub use run::{run_backtest, strategy_actions};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{stage} [{asset}]: {message}")]
    Stage { stage: &'static str, asset: String, message: String },
}

impl RunError {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        RunError::Config { path: PathBuf::new(), message: message.into() }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn stage(stage: &'static str, asset: &str, message: impl ToString) -> Self {
        RunError::Stage { stage, asset: asset.to_string(), message: message.to_string() }
    }
}
