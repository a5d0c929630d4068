//! Market simulators: a single-asset BUY/HOLD/SELL environment with exact
//! fee accounting, a multi-asset rebalancing environment over the
//! cash-inclusive simplex, and the trading prompt renderer.

mod portfolio;
mod prompt;
mod trading;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use portfolio::{
    read_portfolio_ledger_csv, write_portfolio_ledger_csv, PortfolioEnv, PortfolioRecord, PortfolioState, WeightVector,
    PORTFOLIO_LEDGER_PREFIX,
};
pub use prompt::{format_general, render_prompt, PromptContext};
pub use trading::{
    episode_return, read_ledger_csv, write_ledger_csv, StepRecord, TradingEnv, TradingEnvConfig, TradingState,
    LEDGER_COLUMNS,
};

pub const DEFAULT_INITIAL_CASH: f64 = 1e5;
pub const DEFAULT_FEE_RATE: f64 = 1e-4;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EnvError {
    #[error("initial cash must be > 0, got {0}")]
    InitialCash(f64),
    #[error("fee rate must be in [0, 1), got {0}")]
    FeeRate(f64),
    #[error("need at least {need} bars from the start index, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("episode finished at step {0}")]
    EpisodeDone(usize),
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("non-positive price {price} at step {t}")]
    BadPrice { t: usize, price: f64 },
    #[error("missing price for {symbol} at step {t}")]
    MissingPrice { symbol: String, t: usize },
    #[error("weights must be non-negative and sum to 1, got {0:?}")]
    Weights(Vec<f64>),
    #[error("target has {got} weights, expected {expected}")]
    WeightCount { expected: usize, got: usize },
    #[error("rebalance infeasible: costs exceed book value")]
    Infeasible,
    #[error("ledger: {0}")]
    Ledger(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Action {
    Buy,
    Hold,
    Sell,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Buy, Action::Hold, Action::Sell];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Buy => "BUY",
            Action::Hold => "HOLD",
            Action::Sell => "SELL",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown action {0:?}")]
pub struct ParseActionError(pub String);

impl FromStr for Action {
    type Err = ParseActionError;

    /// Exact, case-sensitive match on BUY / HOLD / SELL.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "BUY" => Ok(Action::Buy),
            "HOLD" => Ok(Action::Hold),
            "SELL" => Ok(Action::Sell),
            _ => Err(ParseActionError(s.to_string())),
        }
    }
}
