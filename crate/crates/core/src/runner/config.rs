use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::RunError;
use crate::envs::{DEFAULT_FEE_RATE, DEFAULT_INITIAL_CASH};
use crate::factors::WindowSet;
use crate::ingest::{Interval, API_KEY_ENV};
use crate::metrics::MetricName;
use crate::strategies::StrategySpec;
use crate::types::{format_timestamp, parse_timestamp, Timestamp};

fn de_ts<'de, D: Deserializer<'de>>(d: D) -> Result<Timestamp, D::Error> {
    let v = toml::Value::deserialize(d)?;
    let text = match v {
        toml::Value::String(s) => s,
        toml::Value::Datetime(dt) => dt.to_string(),
        other => return Err(serde::de::Error::custom(format!("expected a date, got {other}"))),
    };
    parse_timestamp(&text).map_err(serde::de::Error::custom)
}

fn de_ts_opt<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Timestamp>, D::Error> {
    de_ts(d).map(Some)
}

fn ser_ts<S: Serializer>(ts: &Timestamp, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_timestamp(ts))
}

fn ser_ts_opt<S: Serializer>(ts: &Option<Timestamp>, s: S) -> Result<S::Ok, S::Error> {
    match ts {
        Some(ts) => ser_ts(ts, s),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// One `{SYMBOL}.csv` per symbol in `dir`.
    Files {
        dir: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        news: Option<PathBuf>,
    },
    Provider {
        provider: String,
        base_url: String,
        #[serde(default = "default_version")]
        version: String,
        /// Environment variable holding the API key.
        #[serde(default = "default_key_env")]
        api_key_env: String,
        #[serde(default = "default_retries")]
        max_retries: u32,
        #[serde(default = "default_requests")]
        requests_per_window: u32,
        #[serde(default = "default_window_ms")]
        window_ms: u64,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        news: Option<PathBuf>,
    },
}

fn default_version() -> String {
    "v1".into()
}
fn default_key_env() -> String {
    API_KEY_ENV.into()
}
fn default_retries() -> u32 {
    3
}
fn default_requests() -> u32 {
    5
}
fn default_window_ms() -> u64 {
    1000
}
fn default_timeout_ms() -> u64 {
    30_000
}

impl DataSource {
    pub fn news(&self) -> Option<&Path> {
        match self {
            DataSource::Files { news, .. } | DataSource::Provider { news, .. } => news.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(deserialize_with = "de_ts", serialize_with = "ser_ts")]
    pub train_end: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct FactorConfig {
    pub windows: WindowSet,
    /// Standardize with train-split statistics before writing.
    pub scale: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub initial_cash: f64,
    pub fee_rate: f64,
}

impl Default for EnvSection {
    fn default() -> Self {
        EnvSection { initial_cash: DEFAULT_INITIAL_CASH, fee_rate: DEFAULT_FEE_RATE }
    }
}

fn default_metrics() -> Vec<String> {
    MetricName::TRADING.iter().map(|m| m.as_str().to_string()).collect()
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_ppy() -> f64 {
    252.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub symbols: Vec<String>,
    #[serde(default = "default_interval")]
    pub interval: Interval,
    #[serde(default, deserialize_with = "de_ts_opt", serialize_with = "ser_ts_opt")]
    pub start: Option<Timestamp>,
    #[serde(default, deserialize_with = "de_ts_opt", serialize_with = "ser_ts_opt")]
    pub end: Option<Timestamp>,
    pub data: DataSource,
    pub split: SplitConfig,
    #[serde(default)]
    pub factors: FactorConfig,
    pub strategy: StrategySpec,
    #[serde(default)]
    pub env: EnvSection,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<String>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ppy")]
    pub periods_per_year: f64,
    #[serde(default)]
    pub risk_free: f64,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_interval() -> Interval {
    Interval::Daily
}

impl RunConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn metric_names(&self) -> Result<Vec<MetricName>, RunError> {
        self.metrics
            .iter()
            .map(|m| {
                let name: MetricName =
                    m.parse().map_err(|e: crate::metrics::UnknownMetric| RunError::config(e.to_string()))?;
                if !MetricName::TRADING.contains(&name) {
                    return Err(RunError::config(format!("metric {name} is not computed by backtests")));
                }
                Ok(name)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.symbols.is_empty() {
            return Err(RunError::config("symbols must not be empty"));
        }
        let unique: BTreeSet<&String> = self.symbols.iter().collect();
        if unique.len() != self.symbols.len() {
            return Err(RunError::config("duplicate symbol"));
        }
        let train_end = self.split.train_end;
        if let Some(start) = self.start {
            if train_end <= start {
                return Err(RunError::config(format!("split.train_end {train_end} is not after start {start}")));
            }
        }
        if let Some(end) = self.end {
            if train_end > end {
                return Err(RunError::config(format!("split.train_end {train_end} is after end {end}")));
            }
        }
        if !(self.periods_per_year > 0.0) {
            return Err(RunError::config("periods_per_year must be > 0"));
        }
        self.metric_names()?;
        if let StrategySpec::TopkDropout { k, d, .. } = &self.strategy {
            if !(1 <= *d && d <= k && *k <= self.symbols.len()) {
                return Err(RunError::config(format!("topk_dropout needs 1 <= d <= k <= {}", self.symbols.len())));
            }
        }
        Ok(())
    }
}

/// Tables selecting a variant by `name` or `kind`; switching the variant
/// discards the base's variant-specific keys.
fn switches_variant(b: &toml::Table, o: &toml::Table) -> bool {
    ["name", "kind"].iter().any(|k| matches!((b.get(*k), o.get(*k)), (Some(x), Some(y)) if x != y))
}

/// Overlays `over` onto `base`: tables merge recursively, anything else in
/// `over` replaces the base value.
fn merge(base: &mut toml::Value, over: toml::Value, nested: bool) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) if !(nested && switches_variant(b, &o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v, true),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn load_table(path: &Path, chain: &mut Vec<PathBuf>) -> Result<(toml::Value, String), RunError> {
    let canonical = path.canonicalize().map_err(|e| RunError::io(path, e))?;
    if chain.contains(&canonical) {
        return Err(RunError::Config { path: path.to_path_buf(), message: "extends cycle".into() });
    }
    chain.push(canonical);
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    let mut value: toml::Value =
        toml::from_str(&text).map_err(|e| RunError::Config { path: path.to_path_buf(), message: e.to_string() })?;
    let parent = value.as_table_mut().and_then(|t| t.remove("extends"));
    match parent {
        None => Ok((value, text)),
        Some(toml::Value::String(rel)) => {
            let base_path = path.parent().unwrap_or(Path::new(".")).join(rel);
            let (mut base, _) = load_table(&base_path, chain)?;
            merge(&mut base, value, false);
            let merged = toml::to_string(&base)
                .map_err(|e| RunError::Config { path: path.to_path_buf(), message: e.to_string() })?;
            Ok((base, merged))
        }
        Some(_) => Err(RunError::Config { path: path.to_path_buf(), message: "extends must be a path string".into() }),
    }
}

/// Reads a TOML run config, following `extends` chains (the extending file
/// wins), and validates it. Relative paths resolve against the directory of
/// `path`.
pub fn load_config(path: &Path) -> Result<RunConfig, RunError> {
    let (_, text) = load_table(path, &mut Vec::new())?;
    let mut cfg: RunConfig =
        toml::from_str(&text).map_err(|e| RunError::Config { path: path.to_path_buf(), message: e.to_string() })?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    cfg.validate().map_err(|e| match e {
        RunError::Config { message, .. } => RunError::Config { path: path.to_path_buf(), message },
        other => other,
    })?;
    Ok(cfg)
}
