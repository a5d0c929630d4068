use std::time::Duration;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{DataSource, RunConfig, RunError};
use crate::ingest::{
    parse_news_jsonl, parse_ohlcv_csv, Backoff, Fetcher, ParsePolicy, Provenance, ProviderConfig, RateLimit,
    RateLimiter,
};
use crate::types::{validate_bars, AssetSeries, NewsItem, ValidationPolicy};

#[derive(Debug, Clone)]
pub struct LoadedSeries {
    pub series: AssetSeries,
    pub provenance: Provenance,
}

fn in_range(cfg: &RunConfig, series: AssetSeries) -> AssetSeries {
    let bars = series
        .bars
        .into_iter()
        .filter(|b| cfg.start.is_none_or(|s| b.timestamp >= s) && cfg.end.is_none_or(|e| b.timestamp <= e))
        .collect();
    AssetSeries { symbol: series.symbol, bars }
}

/// Loads, range-filters and validates every configured symbol, in config
/// order. `retrieved_at` stamps file sources.
pub fn load_series(cfg: &RunConfig, retrieved_at: &str) -> Result<Vec<LoadedSeries>, RunError> {
    let loaded: Vec<LoadedSeries> = match &cfg.data {
        DataSource::Files { dir, .. } => cfg
            .symbols
            .par_iter()
            .map(|sym| {
                let path = cfg.resolve(dir).join(format!("{sym}.csv"));
                let bytes = std::fs::read(&path).map_err(|e| RunError::io(&path, e))?;
                let series = parse_ohlcv_csv(&bytes, sym).map_err(|e| RunError::stage("ingest", sym, e))?;
                let provenance = Provenance {
                    provider: "file".into(),
                    version: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                    retrieved_at: retrieved_at.to_string(),
                    request_digest: hex::encode(Sha256::digest(&bytes)),
                };
                Ok(LoadedSeries { series, provenance })
            })
            .collect::<Result<_, RunError>>()?,
        DataSource::Provider {
            provider,
            base_url,
            version,
            api_key_env,
            max_retries,
            requests_per_window,
            window_ms,
            timeout_ms,
            ..
        } => {
            let (start, end) = match (cfg.start, cfg.end) {
                (Some(s), Some(e)) => (s, e),
                _ => return Err(RunError::config("provider sources need start and end")),
            };
            let mut pc =
                ProviderConfig::new(provider.clone(), base_url.clone(), std::env::var(api_key_env).unwrap_or_default());
            pc.version = version.clone();
            pc.max_retries = *max_retries;
            pc.backoff = Backoff::default();
            pc.rate_limit = RateLimit { max_requests: *requests_per_window, window: Duration::from_millis(*window_ms) };
            pc.timeout = Duration::from_millis(*timeout_ms);
            let fetcher = Fetcher::with_limiter(pc.clone(), RateLimiter::new(pc.rate_limit))
                .map_err(|e| RunError::stage("ingest", "*", e))?;
            cfg.symbols
                .par_iter()
                .map(|sym| {
                    let (series, provenance) = fetcher
                        .fetch_bars(sym, cfg.interval, start, end)
                        .map_err(|e| RunError::stage("ingest", sym, e))?;
                    Ok(LoadedSeries { series, provenance })
                })
                .collect::<Result<_, RunError>>()?
        }
    };
    loaded
        .into_iter()
        .map(|l| {
            let sym = l.series.symbol.clone();
            let series = in_range(cfg, l.series);
            let (series, _) =
                validate_bars(&series, ValidationPolicy::Reject).map_err(|e| RunError::stage("validate", &sym, e))?;
            Ok(LoadedSeries { series, provenance: l.provenance })
        })
        .collect()
}

/// News for the configured symbols, sorted by time; empty when no news file
/// is configured.
pub fn load_news(cfg: &RunConfig) -> Result<Vec<NewsItem>, RunError> {
    let Some(path) = cfg.data.news() else {
        return Ok(Vec::new());
    };
    let path = cfg.resolve(path);
    let bytes = std::fs::read(&path).map_err(|e| RunError::io(&path, e))?;
    let parsed = parse_news_jsonl(&bytes, ParsePolicy::Strict).map_err(|e| RunError::stage("ingest", "news", e))?;
    let mut items: Vec<NewsItem> = parsed.items.into_iter().filter(|n| cfg.symbols.contains(&n.symbol)).collect();
    items.sort_by_key(|a| a.timestamp);
    Ok(items)
}
