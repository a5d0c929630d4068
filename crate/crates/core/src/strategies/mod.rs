//! Deterministic baseline policies: BUY&HOLD, MACD crossover, the threshold
//! rule over predicted returns, and Top-k Dropout portfolio construction.

mod macd;
mod topk;

use serde::{Deserialize, Serialize};

use crate::envs::Action;

pub use macd::{ema, macd_signals, macd_signals_from, MacdOutput, MacdParams};
pub use topk::{topk_dropout, ScorePanel, TopkParams, TopkSchedule};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StrategyError {
    #[error("empty input")]
    Empty,
    #[error("EMA span must be >= 1, got {0}")]
    Span(usize),
    #[error("MACD needs fast < slow and all spans >= 1, got {fast}/{slow}/{signal}")]
    MacdParams { fast: usize, slow: usize, signal: usize },
    #[error("series of length {len} is shorter than the slow span {slow}")]
    TooShort { len: usize, slow: usize },
    #[error("threshold must be >= 0, got {0}")]
    Threshold(f64),
    #[error("top-k needs 1 <= d <= k <= universe size, got k={k}, d={d}, universe {universe}")]
    TopkParams { k: usize, d: usize, universe: usize },
    #[error("period {t}: only {have} scorable assets, need {k}")]
    NotEnoughScores { t: usize, have: usize, k: usize },
    #[error("score panel shape: {0}")]
    Shape(String),
}

/// Buy on the first bar, hold afterwards.
pub fn buy_and_hold(len: usize) -> Vec<Action> {
    (0..len).map(|i| if i == 0 { Action::Buy } else { Action::Hold }).collect()
}

/// BUY when the prediction exceeds `tau`, SELL below `-tau`, HOLD otherwise.
pub fn threshold_rule(predictions: &[f64], tau: f64) -> Result<Vec<Action>, StrategyError> {
    if !(tau >= 0.0) {
        return Err(StrategyError::Threshold(tau));
    }
    Ok(predictions
        .iter()
        .map(|&y| {
            if y > tau {
                Action::Buy
            } else if y < -tau {
                Action::Sell
            } else {
                Action::Hold
            }
        })
        .collect())
}

/// Strategy selection as it appears in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategySpec {
    BuyAndHold {},
    Macd {
        #[serde(default)]
        params: MacdParams,
    },
    Threshold {
        /// CSV with `timestamp,prediction` rows.
        predictions: std::path::PathBuf,
        #[serde(default)]
        tau: f64,
    },
    TopkDropout {
        /// Long CSV with `timestamp,symbol,score` rows.
        scores: std::path::PathBuf,
        k: usize,
        d: usize,
    },
}

impl StrategySpec {
    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::BuyAndHold {} => "buy_and_hold",
            StrategySpec::Macd { .. } => "macd",
            StrategySpec::Threshold { .. } => "threshold",
            StrategySpec::TopkDropout { .. } => "topk_dropout",
        }
    }

    pub fn is_portfolio(&self) -> bool {
        matches!(self, StrategySpec::TopkDropout { .. })
    }
}
