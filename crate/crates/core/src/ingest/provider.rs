//! REST client for provider-style bar endpoints with retries, a shared
//! sliding-window rate limiter and provenance stamping.
//!
//! Wire contract: `GET {base_url}/bars?symbol=&interval=&start=&end=` with the
//! API key in a header; a 200 body is a JSON array of objects carrying the
//! OHLCV CSV column names.

use std::collections::VecDeque;
use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::types::{format_timestamp, parse_timestamp, AssetSeries, Bar, Timestamp};

/// Environment variable that overrides the configured API key.
pub const API_KEY_ENV: &str = "TRADELAB_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interval {
    Daily,
    Minute,
}

impl Interval {
    pub fn as_str(&self) -> &'static str {
        match self {
            Interval::Daily => "daily",
            Interval::Minute => "minute",
        }
    }
}

/// Exponential backoff with full jitter: the wait before retry `n` (0-based)
/// is uniform in `[0, min(max, base * factor^n)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backoff {
    pub base: Duration,
    pub factor: f64,
    pub max: Duration,
    pub jitter: bool,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff { base: Duration::from_millis(100), factor: 2.0, max: Duration::from_secs(10), jitter: true }
    }
}

impl Backoff {
    pub fn ceiling(&self, retry: u32) -> Duration {
        let secs = self.base.as_secs_f64() * self.factor.powi(retry as i32);
        Duration::from_secs_f64(secs.min(self.max.as_secs_f64()))
    }

    fn delay(&self, retry: u32) -> Duration {
        let ceiling = self.ceiling(retry);
        if self.jitter && !ceiling.is_zero() {
            ceiling.mul_f64(rand::thread_rng().gen_range(0.0..=1.0))
        } else {
            ceiling
        }
    }
}

/// At most `max_requests` per `window`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateLimit {
    pub max_requests: u32,
    pub window: Duration,
}

#[derive(Clone)]
pub struct ProviderConfig {
    pub provider: String,
    pub version: String,
    pub base_url: String,
    pub api_key: String,
    pub api_key_header: String,
    pub max_retries: u32,
    pub backoff: Backoff,
    pub rate_limit: RateLimit,
    pub timeout: Duration,
}

impl fmt::Debug for ProviderConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProviderConfig")
            .field("provider", &self.provider)
            .field("version", &self.version)
            .field("base_url", &self.base_url)
            .field("api_key", &"<redacted>")
            .field("api_key_header", &self.api_key_header)
            .field("max_retries", &self.max_retries)
            .field("backoff", &self.backoff)
            .field("rate_limit", &self.rate_limit)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl ProviderConfig {
    pub fn new(provider: impl Into<String>, base_url: impl Into<String>, api_key: impl Into<String>) -> Self {
        ProviderConfig {
            provider: provider.into(),
            version: "v1".into(),
            base_url: base_url.into(),
            api_key: api_key.into(),
            api_key_header: "X-API-Key".into(),
            max_retries: 3,
            backoff: Backoff::default(),
            rate_limit: RateLimit { max_requests: 5, window: Duration::from_secs(1) },
            timeout: Duration::from_secs(30),
        }
    }

    /// Replaces the API key with `$TRADELAB_API_KEY` when it is set.
    pub fn with_env_key(mut self) -> Self {
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            if !key.is_empty() {
                self.api_key = key;
            }
        }
        self
    }

    fn validate(&self) -> Result<(), FetchError> {
        if self.rate_limit.max_requests == 0 {
            return Err(FetchError::Config("rate_limit.max_requests must be > 0".into()));
        }
        if self.rate_limit.window.is_zero() {
            return Err(FetchError::Config("rate_limit.window must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub provider: String,
    pub version: String,
    pub retrieved_at: String,
    /// SHA-256 over the canonical request parameters.
    pub request_digest: String,
}

#[derive(Debug, thiserror::Error)]
pub enum FetchError {
    #[error("invalid provider config: {0}")]
    Config(String),
    #[error("invalid request: {0}")]
    Request(String),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("gave up after {attempts} attempts; last status {last_status:?}, last error: {last_error}")]
    RetriesExhausted { attempts: u32, last_status: Option<u16>, last_error: String },
    #[error("malformed payload: {0}")]
    Decode(String),
}

/// Sliding-window limiter shared by every fetch that holds a clone.
#[derive(Debug, Clone)]
pub struct RateLimiter {
    limit: RateLimit,
    sent: Arc<Mutex<VecDeque<Instant>>>,
}

impl RateLimiter {
    pub fn new(limit: RateLimit) -> Self {
        RateLimiter { limit, sent: Arc::new(Mutex::new(VecDeque::new())) }
    }

    /// Blocks until a request slot is free and claims it, returning the
    /// instant the slot was recorded at.
    pub fn acquire(&self) -> Instant {
        loop {
            let wait = {
                let mut sent = self.sent.lock().unwrap_or_else(|e| e.into_inner());
                let now = Instant::now();
                while sent.front().is_some_and(|t| now.duration_since(*t) >= self.limit.window) {
                    sent.pop_front();
                }
                if sent.len() < self.limit.max_requests as usize {
                    sent.push_back(now);
                    return now;
                }
                self.limit.window - now.duration_since(sent[0])
            };
            std::thread::sleep(wait);
        }
    }
}

#[derive(Deserialize)]
struct WireBar {
    timestamp: String,
    open: f64,
    high: f64,
    low: f64,
    close: f64,
    volume: f64,
    #[serde(default, alias = "adj_close")]
    adjusted_close: Option<f64>,
}

/// Client bound to one provider config and rate limiter. Cheap to clone;
/// clones share the limiter.
#[derive(Clone)]
pub struct Fetcher {
    config: ProviderConfig,
    limiter: RateLimiter,
    agent: ureq::Agent,
}

impl Fetcher {
    pub fn new(config: ProviderConfig) -> Result<Self, FetchError> {
        let limiter = RateLimiter::new(config.rate_limit);
        Self::with_limiter(config, limiter)
    }

    pub fn with_limiter(config: ProviderConfig, limiter: RateLimiter) -> Result<Self, FetchError> {
        config.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Ok(Fetcher { config, limiter, agent })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    pub fn fetch_bars(
        &self,
        symbol: &str,
        interval: Interval,
        start: Timestamp,
        end: Timestamp,
    ) -> Result<(AssetSeries, Provenance), FetchError> {
        if start > end {
            return Err(FetchError::Request(format!("start {start} after end {end}")));
        }
        let start_s = format_timestamp(&start);
        let end_s = format_timestamp(&end);
        let url = format!("{}/bars", self.config.base_url.trim_end_matches('/'));
        let attempts = self.config.max_retries + 1;
        let mut last_status = None;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.config.backoff.delay(attempt - 1));
            }
            self.limiter.acquire();
            let result = self
                .agent
                .get(&url)
                .query("symbol", symbol)
                .query("interval", interval.as_str())
                .query("start", &start_s)
                .query("end", &end_s)
                .header(self.config.api_key_header.as_str(), self.config.api_key.as_str())
                .call();
            match result {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let body = resp.body_mut().read_to_string().unwrap_or_default();
                    if status == 200 {
                        let series = decode_bars(&body, symbol, start, end)?;
                        let provenance = self.provenance(symbol, interval, &start_s, &end_s);
                        return Ok((series, provenance));
                    }
                    if status == 429 || (500..600).contains(&status) {
                        log::warn!("{} {symbol}: HTTP {status} on attempt {}", self.config.provider, attempt + 1);
                        last_status = Some(status);
                        last_error = format!("HTTP {status}");
                        continue;
                    }
                    return Err(FetchError::Status { status, body });
                }
                Err(e) => {
                    log::warn!("{} {symbol}: transport error on attempt {}: {e}", self.config.provider, attempt + 1);
                    last_error = e.to_string();
                }
            }
        }
        Err(FetchError::RetriesExhausted { attempts, last_status, last_error })
    }

    fn provenance(&self, symbol: &str, interval: Interval, start: &str, end: &str) -> Provenance {
        let canonical = format!(
            "base_url={}&symbol={symbol}&interval={}&start={start}&end={end}",
            self.config.base_url,
            interval.as_str()
        );
        Provenance {
            provider: self.config.provider.clone(),
            version: self.config.version.clone(),
            retrieved_at: chrono::Utc::now().format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string(),
            request_digest: hex::encode(Sha256::digest(canonical.as_bytes())),
        }
    }
}

/// One-shot convenience around [`Fetcher`].
pub fn fetch_bars(
    config: &ProviderConfig,
    symbol: &str,
    interval: Interval,
    start: Timestamp,
    end: Timestamp,
) -> Result<(AssetSeries, Provenance), FetchError> {
    Fetcher::new(config.clone())?.fetch_bars(symbol, interval, start, end)
}

fn decode_bars(body: &str, symbol: &str, start: Timestamp, end: Timestamp) -> Result<AssetSeries, FetchError> {
    let wire: Vec<WireBar> = serde_json::from_str(body).map_err(|e| FetchError::Decode(e.to_string()))?;
    let mut bars = Vec::with_capacity(wire.len());
    for w in wire {
        let timestamp = parse_timestamp(&w.timestamp).map_err(|e| FetchError::Decode(e.to_string()))?;
        if timestamp < start || timestamp > end {
            continue;
        }
        bars.push(Bar {
            timestamp,
            open: w.open,
            high: w.high,
            low: w.low,
            close: w.close,
            volume: w.volume,
            adjusted_close: w.adjusted_close,
        });
    }
    bars.sort_by_key(|b| b.timestamp);
    AssetSeries::new(symbol, bars).map_err(|e| FetchError::Decode(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tradelab_oracles::{MockProvider, MockResponse};

    const TWO_BARS: &str = r#"[
        {"timestamp":"2023-05-02","open":1,"high":2,"low":0.5,"close":1.5,"volume":10},
        {"timestamp":"2023-05-01","open":1,"high":2,"low":0.5,"close":1.2,"volume":11}
    ]"#;

    fn config(url: String, retries: u32) -> ProviderConfig {
        let mut cfg = ProviderConfig::new("mockfmp", url, "secret-key");
        cfg.max_retries = retries;
        cfg.backoff =
            Backoff { base: Duration::from_millis(1), factor: 2.0, max: Duration::from_millis(5), jitter: true };
        cfg.rate_limit = RateLimit { max_requests: 100, window: Duration::from_secs(1) };
        cfg.timeout = Duration::from_secs(5);
        cfg
    }

    fn range() -> (Timestamp, Timestamp) {
        (parse_timestamp("2023-01-01").unwrap(), parse_timestamp("2023-12-31").unwrap())
    }

    #[test]
    fn two_records_and_provenance() {
        let mock = MockProvider::start(vec![MockResponse::new(200, TWO_BARS)]).unwrap();
        let (s, e) = range();
        let (series, prov) = fetch_bars(&config(mock.base_url(), 2), "AAPL", Interval::Daily, s, e).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series.bars[0].close, 1.2);
        assert_eq!(prov.provider, "mockfmp");
        assert_eq!(prov.request_digest.len(), 64);
        let t = mock.transcript();
        assert_eq!(t.len(), 1);
        assert!(t[0].target.starts_with("/bars?"));
        assert!(t[0].target.contains("symbol=AAPL"));
        assert!(t[0].target.contains("interval=daily"));
        assert_eq!(t[0].header("x-api-key"), Some("secret-key"));
    }

    #[test]
    fn bars_outside_range_are_dropped() {
        let mock = MockProvider::start(vec![MockResponse::new(200, TWO_BARS)]).unwrap();
        let s = parse_timestamp("2023-05-02").unwrap();
        let (series, _) = fetch_bars(&config(mock.base_url(), 0), "AAPL", Interval::Daily, s, s).unwrap();
        assert_eq!(series.len(), 1);
    }

    #[test]
    fn client_error_fails_immediately() {
        let mock = MockProvider::start(vec![MockResponse::new(404, "nope"), MockResponse::new(200, "[]")]).unwrap();
        let (s, e) = range();
        let err = fetch_bars(&config(mock.base_url(), 3), "AAPL", Interval::Daily, s, e).unwrap_err();
        assert!(matches!(err, FetchError::Status { status: 404, .. }));
        assert_eq!(mock.request_count(), 1);
    }

    #[test]
    fn malformed_payload() {
        let mock = MockProvider::start(vec![MockResponse::new(200, "{not json")]).unwrap();
        let (s, e) = range();
        let err = fetch_bars(&config(mock.base_url(), 3), "AAPL", Interval::Daily, s, e).unwrap_err();
        assert!(matches!(err, FetchError::Decode(_)));
    }

    #[test]
    fn timeout_is_retried() {
        let mock = MockProvider::start(vec![
            MockResponse::new(200, "[]").delayed(Duration::from_millis(400)),
            MockResponse::new(200, TWO_BARS),
        ])
        .unwrap();
        let mut cfg = config(mock.base_url(), 1);
        cfg.timeout = Duration::from_millis(300);
        let (s, e) = range();
        let (series, _) = fetch_bars(&cfg, "AAPL", Interval::Daily, s, e).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(mock.request_count(), 2);
    }

    #[test]
    fn start_after_end_rejected() {
        let (s, e) = range();
        let cfg = config("http://127.0.0.1:9".into(), 0);
        assert!(matches!(fetch_bars(&cfg, "A", Interval::Daily, e, s), Err(FetchError::Request(_))));
    }

    #[test]
    fn debug_redacts_key() {
        let cfg = config("http://x".into(), 0);
        assert!(!format!("{cfg:?}").contains("secret-key"));
    }

    #[test]
    fn backoff_ceiling_grows_and_caps() {
        let b =
            Backoff { base: Duration::from_millis(100), factor: 2.0, max: Duration::from_millis(500), jitter: true };
        assert_eq!(b.ceiling(0), Duration::from_millis(100));
        assert_eq!(b.ceiling(2), Duration::from_millis(400));
        assert_eq!(b.ceiling(5), Duration::from_millis(500));
        for _ in 0..100 {
            assert!(b.delay(1) <= Duration::from_millis(200));
        }
    }

    #[test]
    fn limiter_is_safe_across_threads() {
        let limiter = RateLimiter::new(RateLimit { max_requests: 3, window: Duration::from_millis(60) });
        let stamps = Arc::new(Mutex::new(Vec::new()));
        std::thread::scope(|s| {
            for _ in 0..4 {
                let limiter = limiter.clone();
                let stamps = Arc::clone(&stamps);
                s.spawn(move || {
                    for _ in 0..3 {
                        let at = limiter.acquire();
                        stamps.lock().unwrap().push(at);
                    }
                });
            }
        });
        let mut stamps = stamps.lock().unwrap().clone();
        stamps.sort();
        assert_eq!(stamps.len(), 12);
        for i in 3..stamps.len() {
            assert!(stamps[i].duration_since(stamps[i - 3]) >= Duration::from_millis(60));
        }
    }
}
