//! Shared domain vocabulary: bars, series, calendar-aligned panels, news,
//! splits and relative-return targets.

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Calendar instant, always interpreted as UTC.
pub type Timestamp = NaiveDateTime;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DataError {
    #[error("invalid bar at {timestamp}: {field} {message}")]
    InvalidBar { timestamp: Timestamp, field: &'static str, message: String },
    #[error("timestamps not strictly increasing at {0}")]
    Unordered(Timestamp),
    #[error("anchor index {anchor} with horizon {horizon} exceeds calendar length {len}")]
    AnchorOutOfRange { anchor: usize, horizon: usize, len: usize },
    #[error("non-positive anchor close {price} for {symbol}")]
    BadAnchorPrice { symbol: String, price: f64 },
    #[error("mixed calendar granularity: {0} is {1:?} but earlier series are {2:?}")]
    MixedGranularity(String, Granularity, Granularity),
    #[error("unparseable timestamp {0:?}")]
    Timestamp(String),
}

/// One OHLCV observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub timestamp: Timestamp,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjusted_close: Option<f64>,
}

impl Bar {
    /// First invariant violation, if any, as (field, message).
    pub fn violation(&self) -> Option<(&'static str, String)> {
        let prices = [("open", self.open), ("high", self.high), ("low", self.low), ("close", self.close)];
        for (name, p) in prices {
            if !p.is_finite() || p <= 0.0 {
                return Some((name, format!("must be a positive price, got {p}")));
            }
        }
        if let Some(adj) = self.adjusted_close {
            if !adj.is_finite() || adj <= 0.0 {
                return Some(("adjusted_close", format!("must be a positive price, got {adj}")));
            }
        }
        if !self.volume.is_finite() || self.volume < 0.0 {
            return Some(("volume", format!("must be >= 0, got {}", self.volume)));
        }
        if self.low > self.open.min(self.close) {
            return Some(("low", format!("{} above min(open, close)", self.low)));
        }
        if self.high < self.open.max(self.close) {
            return Some(("high", format!("{} below max(open, close)", self.high)));
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Daily,
    Intraday,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Granularity::Daily => f.write_str("daily"),
            Granularity::Intraday => f.write_str("intraday"),
        }
    }
}

/// Ordered bars for one symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetSeries {
    pub symbol: String,
    pub bars: Vec<Bar>,
}

impl AssetSeries {
    /// Checks that timestamps are strictly increasing.
    pub fn new(symbol: impl Into<String>, bars: Vec<Bar>) -> Result<Self, DataError> {
        for pair in bars.windows(2) {
            if pair[1].timestamp <= pair[0].timestamp {
                return Err(DataError::Unordered(pair[1].timestamp));
            }
        }
        Ok(AssetSeries { symbol: symbol.into(), bars })
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    pub fn timestamps(&self) -> Vec<Timestamp> {
        self.bars.iter().map(|b| b.timestamp).collect()
    }

    /// `None` for an empty series. A series is daily when every timestamp
    /// falls on midnight.
    pub fn granularity(&self) -> Option<Granularity> {
        if self.bars.is_empty() {
            return None;
        }
        if self.bars.iter().all(|b| b.timestamp.time() == NaiveTime::MIN) {
            Some(Granularity::Daily)
        } else {
            Some(Granularity::Intraday)
        }
    }
}

/// N assets aligned on a shared calendar of T instants. Cell `(i, t)` is
/// `None` where asset `i` has no bar.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    symbols: Vec<String>,
    calendar: Vec<Timestamp>,
    cells: Vec<Option<Bar>>,
}

impl Panel {
    pub(crate) fn from_parts(symbols: Vec<String>, calendar: Vec<Timestamp>, cells: Vec<Option<Bar>>) -> Self {
        debug_assert_eq!(cells.len(), symbols.len() * calendar.len());
        Panel { symbols, calendar, cells }
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn calendar(&self) -> &[Timestamp] {
        &self.calendar
    }

    pub fn n_assets(&self) -> usize {
        self.symbols.len()
    }

    pub fn n_periods(&self) -> usize {
        self.calendar.len()
    }

    pub fn bar(&self, asset: usize, t: usize) -> Option<&Bar> {
        self.cells[asset * self.calendar.len() + t].as_ref()
    }

    pub fn is_present(&self, asset: usize, t: usize) -> bool {
        self.bar(asset, t).is_some()
    }

    pub fn close(&self, asset: usize, t: usize) -> Option<f64> {
        self.bar(asset, t).map(|b| b.close)
    }

    pub fn asset_index(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    /// Present bars of one asset, in calendar order.
    pub fn series(&self, asset: usize) -> AssetSeries {
        let bars = (0..self.calendar.len()).filter_map(|t| self.bar(asset, t).copied()).collect();
        AssetSeries { symbol: self.symbols[asset].clone(), bars }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsItem {
    pub timestamp: Timestamp,
    pub symbol: String,
    pub title: String,
    pub content: String,
}

/// Sparse calendar features; weekday 0 is Monday.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalFeatures {
    pub day: u32,
    pub month: u32,
    pub weekday: u32,
    pub year: i32,
}

impl TemporalFeatures {
    pub fn from_timestamp(ts: Timestamp) -> Self {
        TemporalFeatures {
            day: ts.day(),
            month: ts.month(),
            weekday: ts.weekday().num_days_from_monday(),
            year: ts.year(),
        }
    }
}

/// Rows strictly before `train_end` are train, the rest test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_end: Timestamp,
}

impl SplitSpec {
    /// Index of the first test row in `calendar`.
    pub fn boundary(&self, calendar: &[Timestamp]) -> usize {
        calendar.partition_point(|ts| *ts < self.train_end)
    }
}

/// Forward returns of each asset relative to the close at `anchor_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeReturns {
    /// `values[i][s]` is the return of asset `i` at step `s + 1` after the
    /// anchor, `None` where either close is missing.
    pub values: Vec<Vec<Option<f64>>>,
    pub anchor_index: usize,
}

/// R[i][s] = close[i][anchor + s + 1] / close[i][anchor] - 1.
pub fn compute_relative_returns(panel: &Panel, anchor: usize, horizon: usize) -> Result<RelativeReturns, DataError> {
    let len = panel.n_periods();
    if anchor + horizon >= len {
        return Err(DataError::AnchorOutOfRange { anchor, horizon, len });
    }
    let mut values = Vec::with_capacity(panel.n_assets());
    for i in 0..panel.n_assets() {
        let base = panel.close(i, anchor);
        if let Some(p) = base {
            if p <= 0.0 {
                return Err(DataError::BadAnchorPrice { symbol: panel.symbols[i].clone(), price: p });
            }
        }
        let row = (1..=horizon)
            .map(|s| match (base, panel.close(i, anchor + s)) {
                (Some(b), Some(c)) => Some(c / b - 1.0),
                _ => None,
            })
            .collect();
        values.push(row);
    }
    Ok(RelativeReturns { values, anchor_index: anchor })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ValidationPolicy {
    #[default]
    Reject,
    Drop,
    Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub timestamp: Timestamp,
    pub field: &'static str,
    pub message: String,
}

/// Checks every bar against the OHLCV invariants.
///
/// `Reject` fails on the first violation, `Drop` removes offending bars and
/// `Flag` returns the series untouched; the latter two list every violation.
pub fn validate_bars(
    series: &AssetSeries,
    policy: ValidationPolicy,
) -> Result<(AssetSeries, Vec<Violation>), DataError> {
    let mut report = Vec::new();
    let mut kept = Vec::with_capacity(series.bars.len());
    for bar in &series.bars {
        match bar.violation() {
            None => kept.push(*bar),
            Some((field, message)) => {
                if policy == ValidationPolicy::Reject {
                    return Err(DataError::InvalidBar { timestamp: bar.timestamp, field, message });
                }
                report.push(Violation { timestamp: bar.timestamp, field, message });
                if policy == ValidationPolicy::Flag {
                    kept.push(*bar);
                }
            }
        }
    }
    Ok((AssetSeries { symbol: series.symbol.clone(), bars: kept }, report))
}

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DD HH:MM:SS`, `YYYY-MM-DDTHH:MM:SS` with
/// optional fractional seconds, and RFC 3339 (converted to UTC).
pub fn parse_timestamp(s: &str) -> Result<Timestamp, DataError> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_time(NaiveTime::MIN));
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M"] {
        if let Ok(ts) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(ts);
        }
    }
    if let Ok(ts) = chrono::DateTime::parse_from_rfc3339(s) {
        return Ok(ts.naive_utc());
    }
    Err(DataError::Timestamp(s.to_string()))
}

/// Inverse of [`parse_timestamp`]: dates at midnight print as `YYYY-MM-DD`.
pub fn format_timestamp(ts: &Timestamp) -> String {
    if ts.time() == NaiveTime::MIN {
        ts.format("%Y-%m-%d").to_string()
    } else if ts.nanosecond() == 0 {
        ts.format("%Y-%m-%d %H:%M:%S").to_string()
    } else {
        ts.format("%Y-%m-%d %H:%M:%S%.f").to_string()
    }
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;

    pub fn day(i: i64) -> Timestamp {
        NaiveDate::from_ymd_opt(2020, 1, 1).unwrap().and_time(NaiveTime::MIN) + chrono::Duration::days(i)
    }

    pub fn bar(t: i64, close: f64) -> Bar {
        Bar { timestamp: day(t), open: close, high: close, low: close, close, volume: 1000.0, adjusted_close: None }
    }

    pub fn from_synth(symbol: &str, bars: &[tradelab_oracles::SynthBar]) -> AssetSeries {
        let bars = bars
            .iter()
            .enumerate()
            .map(|(i, b)| Bar {
                timestamp: day(i as i64),
                open: b.open,
                high: b.high,
                low: b.low,
                close: b.close,
                volume: b.volume,
                adjusted_close: None,
            })
            .collect();
        AssetSeries::new(symbol, bars).unwrap()
    }

    pub fn series(symbol: &str, closes: &[f64]) -> AssetSeries {
        AssetSeries::new(symbol, closes.iter().enumerate().map(|(i, &c)| bar(i as i64, c)).collect()).unwrap()
    }
}
