//! Data ingestion: file parsers, the REST provider client, calendar
//! alignment and per-asset feature standardization.

mod calendar;
mod csv_io;
mod news;
mod provider;
mod scaler;

pub use calendar::align_calendar;
pub use csv_io::{parse_ohlcv_csv, write_ohlcv_csv, CsvError};
pub use news::{parse_news_jsonl, NewsError, NewsParse, ParsePolicy};
pub use provider::{
    fetch_bars, Backoff, FetchError, Fetcher, Interval, Provenance, ProviderConfig, RateLimit, RateLimiter, API_KEY_ENV,
};
pub use scaler::{apply_scaler, fit_scaler, AssetScale, ScalerError, ScalerParams, DEFAULT_EPSILON};

use crate::types::{TemporalFeatures, Timestamp};

/// Calendar decomposition of a UTC instant.
pub fn temporal_features(ts: Timestamp) -> TemporalFeatures {
    TemporalFeatures::from_timestamp(ts)
}
