use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use super::report::{drawdown_points, EpisodeResult, LedgerKind, RunReport, SeriesPoint};
use super::{load_series, LoadedSeries, RunConfig, RunError};
use crate::envs::{episode_return, Action, PortfolioEnv, TradingEnv, TradingEnvConfig};
use crate::ingest::align_calendar;
use crate::metrics::{MetricReport, ReturnSeries};
use crate::strategies::{
    buy_and_hold, macd_signals_from, threshold_rule, topk_dropout, ScorePanel, StrategySpec, TopkParams,
};
use crate::types::{format_timestamp, parse_timestamp, AssetSeries, SplitSpec, Timestamp};

fn read_csv_rows(path: &Path, asset: &str) -> Result<(csv::StringRecord, Vec<csv::StringRecord>), RunError> {
    let bytes = std::fs::read(path).map_err(|e| RunError::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let err = |e: csv::Error| RunError::stage("strategy", asset, format!("{}: {e}", path.display()));
    let headers = rdr.headers().map_err(err)?.clone();
    let rows = rdr.records().collect::<Result<Vec<_>, _>>().map_err(err)?;
    Ok((headers, rows))
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name))
}

/// `timestamp,prediction` rows, optionally with a `symbol` column.
fn read_predictions(path: &Path, symbol: &str) -> Result<HashMap<Timestamp, f64>, RunError> {
    let (headers, rows) = read_csv_rows(path, symbol)?;
    let (ts_col, p_col) = match (column(&headers, "timestamp"), column(&headers, "prediction")) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(RunError::stage("strategy", symbol, "predictions need timestamp and prediction columns")),
    };
    let sym_col = column(&headers, "symbol");
    let mut out = HashMap::new();
    for (i, row) in rows.iter().enumerate() {
        if sym_col.is_some_and(|c| &row[c] != symbol) {
            continue;
        }
        let ts = parse_timestamp(&row[ts_col])
            .map_err(|e| RunError::stage("strategy", symbol, format!("row {}: {e}", i + 2)))?;
        let p: f64 = row[p_col]
            .trim()
            .parse()
            .map_err(|_| RunError::stage("strategy", symbol, format!("row {}: bad prediction", i + 2)))?;
        out.insert(ts, p);
    }
    Ok(out)
}

/// Actions for decision bars `start..len-1` of `series`. Every signal at
/// bar t depends only on data up to t.
pub fn strategy_actions(
    spec: &StrategySpec,
    series: &AssetSeries,
    start: usize,
    base_dir: &Path,
) -> Result<Vec<Action>, RunError> {
    let sym = series.symbol.as_str();
    let steps = series.len().saturating_sub(start + 1);
    match spec {
        StrategySpec::BuyAndHold {} => Ok(buy_and_hold(steps)),
        StrategySpec::Macd { params } => {
            let out =
                macd_signals_from(&series.closes(), params, start).map_err(|e| RunError::stage("strategy", sym, e))?;
            Ok(out.actions[start..start + steps].to_vec())
        }
        StrategySpec::Threshold { predictions, tau } => {
            let preds = read_predictions(&base_dir.join(predictions), sym)?;
            let ys: Vec<f64> = series.bars[start..start + steps]
                .iter()
                .map(|b| preds.get(&b.timestamp).copied().unwrap_or(0.0))
                .collect();
            threshold_rule(&ys, *tau).map_err(|e| RunError::stage("strategy", sym, e))
        }
        StrategySpec::TopkDropout { .. } => {
            Err(RunError::stage("strategy", sym, "topk_dropout is a portfolio strategy"))
        }
    }
}

fn trading_metrics(cfg: &RunConfig, rets: Vec<f64>, asset: &str) -> Result<MetricReport, RunError> {
    let rs = ReturnSeries::with_risk_free(rets, cfg.periods_per_year, cfg.risk_free)
        .map_err(|e| RunError::stage("metrics", asset, e))?;
    MetricReport::trading(&rs, &cfg.metric_names()?).map_err(|e| RunError::stage("metrics", asset, e))
}

fn env_config(cfg: &RunConfig, start: usize) -> TradingEnvConfig {
    TradingEnvConfig { initial_cash: cfg.env.initial_cash, fee_rate: cfg.env.fee_rate, start }
}

fn equity_points(calendar: &[Timestamp], first: f64, posts: impl Iterator<Item = f64>) -> Vec<SeriesPoint> {
    std::iter::once(first)
        .chain(posts)
        .zip(calendar)
        .map(|(value, ts)| SeriesPoint { timestamp: format_timestamp(ts), value })
        .collect()
}

fn run_single(cfg: &RunConfig, series: &AssetSeries) -> Result<EpisodeResult, RunError> {
    let sym = series.symbol.as_str();
    let start = SplitSpec { train_end: cfg.split.train_end }.boundary(&series.timestamps());
    if series.len() < start + 2 {
        return Err(RunError::stage("env", sym, format!("test split has {} bars, need 2", series.len() - start)));
    }
    let actions = strategy_actions(&cfg.strategy, series, start, &cfg.base_dir)?;
    let mut env = TradingEnv::new(env_config(cfg, start), Arc::new(series.clone()))
        .map_err(|e| RunError::stage("env", sym, e))?;
    let records = actions
        .iter()
        .map(|a| env.step(*a).map(|(r, _)| r))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| RunError::stage("env", sym, e))?;
    let calendar = &series.timestamps()[start..];
    let equity = equity_points(calendar, records[0].pre_value, records.iter().map(|r| r.post_value));
    let metrics = trading_metrics(cfg, records.iter().map(|r| r.ret).collect(), sym)?;
    Ok(EpisodeResult {
        id: sym.to_string(),
        strategy: cfg.strategy.name().to_string(),
        kind: LedgerKind::Trading,
        test_start: format_timestamp(&calendar[0]),
        test_end: format_timestamp(calendar.last().expect("non-empty")),
        steps: records.len(),
        total_fees: env.state().fees,
        episode_return: episode_return(&records).map_err(|e| RunError::stage("env", sym, e))?,
        metrics,
        ledger: format!("ledger_{sym}.csv"),
        drawdown: drawdown_points(&equity),
        equity,
        trading_records: records,
        portfolio_records: Vec::new(),
        symbols: vec![sym.to_string()],
    })
}

/// Long `timestamp,symbol,score` rows on the panel calendar.
fn read_scores(path: &Path, symbols: &[String], calendar: &[Timestamp]) -> Result<ScorePanel, RunError> {
    let (headers, rows) = read_csv_rows(path, "portfolio")?;
    let cols = (column(&headers, "timestamp"), column(&headers, "symbol"), column(&headers, "score"));
    let (tc, sc, vc) = match cols {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(RunError::stage("strategy", "portfolio", "scores need timestamp, symbol and score columns")),
    };
    let t_index: HashMap<Timestamp, usize> = calendar.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let s_index: HashMap<&str, usize> = symbols.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut grid = vec![vec![None; calendar.len()]; symbols.len()];
    for (i, row) in rows.iter().enumerate() {
        let bad = |m: String| RunError::stage("strategy", "portfolio", format!("scores row {}: {m}", i + 2));
        let ts = parse_timestamp(&row[tc]).map_err(|e| bad(e.to_string()))?;
        let (Some(&t), Some(&a)) = (t_index.get(&ts), s_index.get(row[sc].trim())) else {
            continue;
        };
        let cell = row[vc].trim();
        if !cell.is_empty() {
            grid[a][t] = Some(cell.parse::<f64>().map_err(|_| bad(format!("bad score {cell:?}")))?);
        }
    }
    ScorePanel::new(symbols.to_vec(), grid).map_err(|e| RunError::stage("strategy", "portfolio", e))
}

fn run_portfolio(cfg: &RunConfig, loaded: &[LoadedSeries]) -> Result<EpisodeResult, RunError> {
    let StrategySpec::TopkDropout { scores, k, d } = &cfg.strategy else {
        unreachable!("portfolio strategies only");
    };
    let series: Vec<AssetSeries> = loaded.iter().map(|l| l.series.clone()).collect();
    let panel = align_calendar(&series).map_err(|e| RunError::stage("ingest", "portfolio", e))?;
    let calendar = panel.calendar().to_vec();
    let start = SplitSpec { train_end: cfg.split.train_end }.boundary(&calendar);
    if calendar.len() < start + 2 {
        return Err(RunError::stage("env", "portfolio", "test split needs at least 2 bars"));
    }
    let decisions = &calendar[start..calendar.len() - 1];
    let score_panel = read_scores(&cfg.resolve(scores), panel.symbols(), decisions)?;
    let schedule = topk_dropout(&score_panel, &TopkParams { k: *k, d: *d })
        .map_err(|e| RunError::stage("strategy", "portfolio", e))?;
    let symbols = panel.symbols().to_vec();
    let mut env = PortfolioEnv::new(env_config(cfg, start), Arc::new(panel))
        .map_err(|e| RunError::stage("env", "portfolio", e))?;
    let records = schedule
        .weights
        .iter()
        .map(|w| env.step(w))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| RunError::stage("env", "portfolio", e))?;
    let first = records[0].pre_value;
    let last = records.last().expect("non-empty").post_value;
    let equity = equity_points(&calendar[start..], first, records.iter().map(|r| r.post_value));
    Ok(EpisodeResult {
        id: "portfolio".into(),
        strategy: cfg.strategy.name().to_string(),
        kind: LedgerKind::Portfolio,
        test_start: format_timestamp(&calendar[start]),
        test_end: format_timestamp(calendar.last().expect("non-empty")),
        steps: records.len(),
        total_fees: env.state().fees,
        episode_return: (last - first) / first,
        metrics: trading_metrics(cfg, records.iter().map(|r| r.net_ret).collect(), "portfolio")?,
        ledger: "ledger_portfolio.csv".into(),
        drawdown: drawdown_points(&equity),
        equity,
        trading_records: Vec::new(),
        portfolio_records: records,
        symbols,
    })
}

/// Runs the configured strategy over the test split of every symbol (or
/// the whole universe for portfolio strategies).
pub fn run_backtest(cfg: &RunConfig) -> Result<RunReport, RunError> {
    cfg.validate()?;
    let generated_at = chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string();
    let loaded = load_series(cfg, &generated_at)?;
    let results = if cfg.strategy.is_portfolio() {
        vec![run_portfolio(cfg, &loaded)?]
    } else {
        loaded.par_iter().map(|l| run_single(cfg, &l.series)).collect::<Result<Vec<_>, _>>()?
    };
    Ok(RunReport {
        software: format!("tradelab {}", env!("CARGO_PKG_VERSION")),
        generated_at,
        config: serde_json::to_value(cfg).map_err(|e| RunError::config(e.to_string()))?,
        provenance: loaded.into_iter().map(|l| l.provenance).collect(),
        results,
    })
}
