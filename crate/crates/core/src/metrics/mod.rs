//! Evaluation metrics: trading (ARR, SR, MDD, CR, SoR, VOL, DD),
//! forecasting (MAE, MSE, RankIC, RankICIR) and the reasoning Score.
//!
//! Every function returns fractions; percent formatting happens only in
//! [`MetricReport::to_csv`].

mod forecast;
mod report;
mod trading;

pub use forecast::{mae, mse, rank_ic, rank_ic_series, rank_ic_t, rank_icir, PredictionPanel, RankIcSeries};
pub use report::{MetricName, MetricReport, MetricValue, Unit, UnknownMetric};
pub use trading::{arr, calmar, downside_dev, drawdown_curve, equity_curve, mdd, sharpe, sortino, vol, ReturnSeries};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum MetricError {
    #[error("empty return series")]
    Empty,
    #[error("{metric} needs at least {min} observations, got {got}")]
    TooShort { metric: &'static str, min: usize, got: usize },
    #[error("return {value} at index {index} is not > -1")]
    InvalidReturn { index: usize, value: f64 },
    #[error("periods per year must be > 0, got {0}")]
    PeriodsPerYear(f64),
    #[error("{0} undefined: zero variance")]
    ZeroVariance(&'static str),
    #[error("calmar undefined: zero drawdown")]
    ZeroDrawdown,
    #[error("sortino undefined: zero downside deviation")]
    ZeroDownside,
    #[error("no present cells")]
    NoPresentCells,
    #[error("prediction and truth shapes differ: {0}")]
    Shape(String),
    #[error("time step {0}: fewer than two present assets or all ranks tied")]
    DegenerateRanks(usize),
    #[error("every time step is degenerate")]
    AllDegenerate,
    #[error("score needs 0 <= correct <= total and total > 0, got {correct}/{total}")]
    Score { correct: usize, total: usize },
}

impl MetricError {
    /// True for "metric mathematically undefined on this input" as opposed
    /// to malformed input. Reports render these as n/a.
    pub fn is_undefined(&self) -> bool {
        matches!(
            self,
            MetricError::ZeroVariance(_)
                | MetricError::ZeroDrawdown
                | MetricError::ZeroDownside
                | MetricError::AllDegenerate
                | MetricError::TooShort { .. }
        )
    }
}

/// Accuracy in percent: correct / total * 100.
pub fn score(n_correct: usize, n_total: usize) -> Result<f64, MetricError> {
    if n_total == 0 || n_correct > n_total {
        return Err(MetricError::Score { correct: n_correct, total: n_total });
    }
    Ok(n_correct as f64 / n_total as f64 * 100.0)
}
