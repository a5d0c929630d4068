use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::RunError;
use crate::envs::{
    read_ledger_csv, read_portfolio_ledger_csv, write_ledger_csv, write_portfolio_ledger_csv, PortfolioRecord,
    StepRecord,
};
use crate::ingest::Provenance;
use crate::metrics::{MetricName, MetricReport, ReturnSeries};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedgerKind {
    Trading,
    Portfolio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub timestamp: String,
    pub value: f64,
}

fn ser_metrics<S: Serializer>(m: &MetricReport, s: S) -> Result<S::Ok, S::Error> {
    m.to_json().serialize(s)
}

fn de_metrics<'de, D: Deserializer<'de>>(d: D) -> Result<MetricReport, D::Error> {
    let v = serde_json::Value::deserialize(d)?;
    MetricReport::from_json(&v).map_err(serde::de::Error::custom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub id: String,
    pub strategy: String,
    pub kind: LedgerKind,
    pub test_start: String,
    pub test_end: String,
    pub steps: usize,
    pub total_fees: f64,
    pub episode_return: f64,
    #[serde(serialize_with = "ser_metrics", deserialize_with = "de_metrics")]
    pub metrics: MetricReport,
    /// File name of the ledger, relative to the report.
    pub ledger: String,
    pub equity: Vec<SeriesPoint>,
    pub drawdown: Vec<SeriesPoint>,
    #[serde(skip)]
    pub trading_records: Vec<StepRecord>,
    #[serde(skip)]
    pub portfolio_records: Vec<PortfolioRecord>,
    #[serde(skip)]
    pub symbols: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub software: String,
    /// The only wall-clock field; everything else is a function of config
    /// and data.
    pub generated_at: String,
    pub config: serde_json::Value,
    pub provenance: Vec<Provenance>,
    pub results: Vec<EpisodeResult>,
}

impl RunReport {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub(crate) fn drawdown_points(equity: &[SeriesPoint]) -> Vec<SeriesPoint> {
    let mut peak = f64::NEG_INFINITY;
    equity
        .iter()
        .map(|p| {
            peak = peak.max(p.value);
            SeriesPoint { timestamp: p.timestamp.clone(), value: (peak - p.value) / peak }
        })
        .collect()
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| std::fs::rename(&tmp, path));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(|e| RunError::io(path, e))
}

fn points_csv(points: &[SeriesPoint], column: &str) -> String {
    let mut s = format!("timestamp,{column}\n");
    for p in points {
        s.push_str(&format!("{},{}\n", p.timestamp, p.value));
    }
    s
}

/// Writes report.json, metrics.csv (`id,metric,value`, percent at 4 d.p.),
/// and per result the ledger plus equity/drawdown point series. Returns the
/// written paths.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<(), RunError> {
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        written.push(path);
        Ok(())
    };
    put(REPORT_FILE, report.to_json_string().as_bytes())?;
    let mut metrics_csv = String::from("id,metric,value\n");
    for r in &report.results {
        for line in r.metrics.to_csv().lines().skip(1) {
            metrics_csv.push_str(&format!("{},{line}\n", r.id));
        }
    }
    put("metrics.csv", metrics_csv.as_bytes())?;
    for r in &report.results {
        let mut ledger = Vec::new();
        let res = match r.kind {
            LedgerKind::Trading => write_ledger_csv(&r.trading_records, &mut ledger),
            LedgerKind::Portfolio => write_portfolio_ledger_csv(&r.portfolio_records, &r.symbols, &mut ledger),
        };
        res.map_err(|e| RunError::stage("report", &r.id, e))?;
        put(&r.ledger, &ledger)?;
        put(&format!("equity_{}.csv", r.id), points_csv(&r.equity, "value").as_bytes())?;
        put(&format!("drawdown_{}.csv", r.id), points_csv(&r.drawdown, "drawdown").as_bytes())?;
    }
    Ok(written)
}

/// Recomputes trading metrics from a ledger file alone: the `ret` column of
/// a trading ledger or `net_ret` of a portfolio ledger.
pub fn metrics_from_ledger(
    path: &Path,
    periods_per_year: f64,
    risk_free: f64,
    names: &[MetricName],
) -> Result<MetricReport, RunError> {
    let bytes = std::fs::read(path).map_err(|e| RunError::io(path, e))?;
    let id = path.display().to_string();
    let rets: Vec<f64> = match read_ledger_csv(bytes.as_slice()) {
        Ok(recs) => recs.iter().map(|r| r.ret).collect(),
        Err(_) => read_portfolio_ledger_csv(bytes.as_slice())
            .map_err(|e| RunError::stage("metrics", &id, e))?
            .iter()
            .map(|r| r.net_ret)
            .collect(),
    };
    let rs = ReturnSeries::with_risk_free(rets, periods_per_year, risk_free)
        .map_err(|e| RunError::stage("metrics", &id, e))?;
    MetricReport::trading(&rs, names).map_err(|e| RunError::stage("metrics", &id, e))
}
