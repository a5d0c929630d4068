use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Action, EnvError, DEFAULT_FEE_RATE, DEFAULT_INITIAL_CASH};
use crate::factors::FactorMatrix;
use crate::types::{format_timestamp, parse_timestamp, AssetSeries, Bar, NewsItem, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TradingEnvConfig {
    pub initial_cash: f64,
    pub fee_rate: f64,
    /// Bar index of the first decision.
    pub start: usize,
}

impl Default for TradingEnvConfig {
    fn default() -> Self {
        TradingEnvConfig { initial_cash: DEFAULT_INITIAL_CASH, fee_rate: DEFAULT_FEE_RATE, start: 0 }
    }
}

impl TradingEnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.initial_cash > 0.0 && self.initial_cash.is_finite()) {
            return Err(EnvError::InitialCash(self.initial_cash));
        }
        if !(0.0..1.0).contains(&self.fee_rate) {
            return Err(EnvError::FeeRate(self.fee_rate));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradingState {
    pub t: usize,
    pub cash: f64,
    pub position: f64,
    pub fees: f64,
}

impl TradingState {
    pub fn value(&self, price: f64) -> f64 {
        self.cash + self.position * price
    }
}

/// One decision step. `cash` and `position` are the holdings after the
/// trade at `timestamp`; `post_value` marks them at the next bar.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub timestamp: Timestamp,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
    pub price: f64,
    pub cash: f64,
    pub position: f64,
    pub pre_value: f64,
    pub action: Action,
    pub post_value: f64,
    pub ret: f64,
}

pub const LEDGER_COLUMNS: [&str; 13] = [
    "timestamp",
    "open",
    "high",
    "low",
    "close",
    "volume",
    "price",
    "cash",
    "position",
    "pre_value",
    "action",
    "post_value",
    "ret",
];

/// Execution price: adjusted close when supplied, else close.
fn exec_price(bar: &Bar) -> f64 {
    bar.adjusted_close.unwrap_or(bar.close)
}

/// Single-asset environment. Cloning is cheap (data is shared) and yields an
/// independent branch.
#[derive(Debug, Clone)]
pub struct TradingEnv {
    config: TradingEnvConfig,
    series: Arc<AssetSeries>,
    factors: Option<Arc<FactorMatrix>>,
    news: Arc<Vec<NewsItem>>,
    state: TradingState,
}

impl TradingEnv {
    pub fn new(config: TradingEnvConfig, series: Arc<AssetSeries>) -> Result<Self, EnvError> {
        config.validate()?;
        let got = series.len().saturating_sub(config.start);
        if got < 2 {
            return Err(EnvError::InsufficientData { need: 2, got });
        }
        for (t, bar) in series.bars.iter().enumerate().skip(config.start) {
            let p = exec_price(bar);
            if !(p > 0.0 && p.is_finite()) {
                return Err(EnvError::BadPrice { t, price: p });
            }
        }
        let state = Self::initial_state(&config);
        Ok(TradingEnv { config, series, factors: None, news: Arc::new(Vec::new()), state })
    }

    pub fn with_factors(mut self, factors: Arc<FactorMatrix>) -> Self {
        self.factors = Some(factors);
        self
    }

    pub fn with_news(mut self, news: Arc<Vec<NewsItem>>) -> Self {
        self.news = news;
        self
    }

    fn initial_state(config: &TradingEnvConfig) -> TradingState {
        TradingState { t: config.start, cash: config.initial_cash, position: 0.0, fees: 0.0 }
    }

    pub fn reset(&mut self) -> TradingState {
        self.state = Self::initial_state(&self.config);
        self.state
    }

    pub fn config(&self) -> &TradingEnvConfig {
        &self.config
    }

    pub fn state(&self) -> &TradingState {
        &self.state
    }

    pub fn series(&self) -> &AssetSeries {
        &self.series
    }

    pub fn factors(&self) -> Option<&FactorMatrix> {
        self.factors.as_deref()
    }

    pub fn news(&self) -> &[NewsItem] {
        &self.news
    }

    /// Bars up to and including the current step.
    pub fn observed_bars(&self) -> &[Bar] {
        &self.series.bars[..=self.state.t]
    }

    pub fn price(&self) -> f64 {
        exec_price(&self.series.bars[self.state.t])
    }

    pub fn is_done(&self) -> bool {
        self.state.t + 1 >= self.series.len()
    }

    /// Executes `action` at the current bar, advances one bar and returns
    /// the record together with the reward (the step return).
    pub fn step(&mut self, action: Action) -> Result<(StepRecord, f64), EnvError> {
        if self.is_done() {
            return Err(EnvError::EpisodeDone(self.state.t));
        }
        let lambda = self.config.fee_rate;
        let s = &mut self.state;
        let bar = self.series.bars[s.t];
        let price = exec_price(&bar);
        let pre_value = s.cash + s.position * price;
        match action {
            Action::Buy if s.cash > 0.0 => {
                let dpos = s.cash / (price * (1.0 + lambda));
                s.fees += lambda * dpos * price;
                s.position += dpos;
                s.cash = 0.0;
            }
            Action::Sell if s.position > 0.0 => {
                s.fees += lambda * s.position * price;
                s.cash += s.position * price * (1.0 - lambda);
                s.position = 0.0;
            }
            _ => {}
        }
        s.t += 1;
        let post_value = s.cash + s.position * exec_price(&self.series.bars[s.t]);
        let ret = (post_value - pre_value) / pre_value;
        let record = StepRecord {
            timestamp: bar.timestamp,
            open: bar.open,
            high: bar.high,
            low: bar.low,
            close: bar.close,
            volume: bar.volume,
            price,
            cash: s.cash,
            position: s.position,
            pre_value,
            action,
            post_value,
            ret,
        };
        Ok((record, ret))
    }
}

/// (V_T - V_0) / V_0 over a trajectory.
pub fn episode_return(records: &[StepRecord]) -> Result<f64, EnvError> {
    let (first, last) = match (records.first(), records.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(EnvError::EmptyTrajectory),
    };
    Ok((last.post_value - first.pre_value) / first.pre_value)
}

/// Writes records in [`LEDGER_COLUMNS`] order. Floats use shortest
/// round-trip formatting so the ledger reproduces values exactly.
pub fn write_ledger_csv<W: Write>(records: &[StepRecord], out: W) -> Result<(), EnvError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| EnvError::Ledger(e.to_string());
    w.write_record(LEDGER_COLUMNS).map_err(err)?;
    for r in records {
        let nums = [r.open, r.high, r.low, r.close, r.volume, r.price, r.cash, r.position, r.pre_value];
        let mut row: Vec<String> = vec![format_timestamp(&r.timestamp)];
        row.extend(nums.iter().map(f64::to_string));
        row.push(r.action.to_string());
        row.push(r.post_value.to_string());
        row.push(r.ret.to_string());
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| EnvError::Ledger(e.to_string()))
}

pub fn read_ledger_csv<R: Read>(input: R) -> Result<Vec<StepRecord>, EnvError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(|e| EnvError::Ledger(e.to_string()))?.clone();
    if headers.iter().ne(LEDGER_COLUMNS) {
        return Err(EnvError::Ledger(format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| EnvError::Ledger(format!("row {line}: {e}")))?;
        let num = |k: usize| -> Result<f64, EnvError> {
            row[k]
                .parse::<f64>()
                .map_err(|_| EnvError::Ledger(format!("row {line}: bad {} {:?}", LEDGER_COLUMNS[k], &row[k])))
        };
        out.push(StepRecord {
            timestamp: parse_timestamp(&row[0]).map_err(|e| EnvError::Ledger(format!("row {line}: {e}")))?,
            open: num(1)?,
            high: num(2)?,
            low: num(3)?,
            close: num(4)?,
            volume: num(5)?,
            price: num(6)?,
            cash: num(7)?,
            position: num(8)?,
            pre_value: num(9)?,
            action: row[10].parse().map_err(|e| EnvError::Ledger(format!("row {line}: {e}")))?,
            post_value: num(11)?,
            ret: num(12)?,
        });
    }
    Ok(out)
}
