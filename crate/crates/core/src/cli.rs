//! Command-line front end. Exit codes: 0 success, 1 usage, 2 runtime.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::envs::{read_ledger_csv, render_prompt, PromptContext};
use crate::factors::compute_alpha158;
use crate::ingest::{apply_scaler, fit_scaler, write_ohlcv_csv, DEFAULT_EPSILON};
use crate::metrics::MetricName;
use crate::runner::{
    emit_report, load_config, load_news, load_series, metrics_from_ledger, run_backtest, write_atomic, RunError,
};
use crate::types::SplitSpec;

#[derive(Debug, Parser)]
#[command(name = "tradelab", version, about = "Backtests, factors, metrics and prompts", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MatrixFormat {
    Csv,
    Bin,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fetch or convert the configured data into normalized OHLCV CSVs.
    Ingest {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute Alpha158 factor matrices for every configured symbol.
    Factors {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: MatrixFormat,
    },
    /// Run the configured backtest and write the report.
    Backtest {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute metrics from a ledger CSV.
    Metrics {
        #[arg(long)]
        ledger: PathBuf,
        /// Supplies periods_per_year, risk_free and the metric list.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        periods_per_year: Option<f64>,
        #[arg(long)]
        risk_free: Option<f64>,
        /// Percent CSV instead of JSON fractions.
        #[arg(long)]
        csv: bool,
    },
    /// Render the trading prompt for one ledger row.
    Prompt {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ledger: PathBuf,
        /// 0-based ledger row.
        #[arg(long)]
        row: usize,
        #[arg(long)]
        symbol: Option<String>,
        /// Display name; defaults to the symbol.
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("{0}")]
    Other(String),
}

fn out_dir(cfg: &crate::runner::RunConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| cfg.output_dir())
}

fn execute(cmd: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    let now = chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string();
    match cmd {
        Command::Ingest { config, out } => {
            let cfg = load_config(&config)?;
            let dir = out_dir(&cfg, out).join("data");
            std::fs::create_dir_all(&dir).map_err(|e| RunError::io(&dir, e))?;
            let loaded = load_series(&cfg, &now)?;
            for l in &loaded {
                let mut buf = Vec::new();
                write_ohlcv_csv(&l.series, &mut buf).map_err(|e| RunError::stage("ingest", &l.series.symbol, e))?;
                let path = dir.join(format!("{}.csv", l.series.symbol));
                write_atomic(&path, &buf)?;
                let _ = writeln!(stdout, "{} {} bars -> {}", l.series.symbol, l.series.len(), path.display());
            }
            let prov: Vec<_> = loaded.iter().map(|l| &l.provenance).collect();
            let json = serde_json::to_string_pretty(&prov).map_err(|e| CliError::Other(e.to_string()))?;
            write_atomic(&dir.join("provenance.json"), json.as_bytes())?;
        }
        Command::Factors { config, out, format } => {
            let cfg = load_config(&config)?;
            let dir = out_dir(&cfg, out).join("factors");
            std::fs::create_dir_all(&dir).map_err(|e| RunError::io(&dir, e))?;
            let loaded = load_series(&cfg, &now)?;
            let mut matrices = loaded
                .par_iter()
                .map(|l| {
                    compute_alpha158(&l.series, &cfg.factors.windows)
                        .map_err(|e| RunError::stage("factors", &l.series.symbol, e))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if cfg.factors.scale {
                let split = SplitSpec { train_end: cfg.split.train_end };
                let params =
                    fit_scaler(&matrices, &split, DEFAULT_EPSILON).map_err(|e| RunError::stage("factors", "*", e))?;
                matrices = matrices
                    .iter()
                    .map(|m| apply_scaler(m, &params).map_err(|e| RunError::stage("factors", m.symbol(), e)))
                    .collect::<Result<_, _>>()?;
            }
            for m in &matrices {
                let mut buf = Vec::new();
                let (ext, res) = match format {
                    MatrixFormat::Csv => ("csv", m.write_csv(&mut buf).map_err(|e| e.to_string())),
                    MatrixFormat::Bin => ("tlfm", m.write_binary(&mut buf).map_err(|e| e.to_string())),
                };
                res.map_err(|e| RunError::stage("factors", m.symbol(), e))?;
                let path = dir.join(format!("{}.{ext}", m.symbol()));
                write_atomic(&path, &buf)?;
                let _ = writeln!(stdout, "{} {}x{} -> {}", m.symbol(), m.n_rows(), m.n_cols(), path.display());
            }
        }
        Command::Backtest { config, out } => {
            let cfg = load_config(&config)?;
            let report = run_backtest(&cfg)?;
            let dir = out_dir(&cfg, out);
            emit_report(&report, &dir)?;
            for r in &report.results {
                let _ = write!(stdout, "# {} ({})\n{}", r.id, r.strategy, r.metrics.to_csv());
            }
            let _ = writeln!(stdout, "report: {}", dir.join(crate::runner::REPORT_FILE).display());
        }
        Command::Metrics { ledger, config, periods_per_year, risk_free, csv } => {
            let cfg = config.as_deref().map(load_config).transpose()?;
            let ppy = periods_per_year.or(cfg.as_ref().map(|c| c.periods_per_year)).unwrap_or(252.0);
            let rf = risk_free.or(cfg.as_ref().map(|c| c.risk_free)).unwrap_or(0.0);
            let names = match &cfg {
                Some(c) => c.metric_names()?,
                None => MetricName::TRADING.to_vec(),
            };
            let report = metrics_from_ledger(&ledger, ppy, rf, &names)?;
            if csv {
                let _ = write!(stdout, "{}", report.to_csv());
            } else {
                let json =
                    serde_json::to_string_pretty(&report.to_json()).map_err(|e| CliError::Other(e.to_string()))?;
                let _ = writeln!(stdout, "{json}");
            }
        }
        Command::Prompt { config, ledger, row, symbol, name } => {
            let cfg = load_config(&config)?;
            let symbol = symbol.unwrap_or_else(|| cfg.symbols[0].clone());
            let records = read_ledger(&ledger)?;
            let current = records
                .get(row)
                .ok_or_else(|| CliError::Other(format!("row {row} out of range ({} rows)", records.len())))?;
            let loaded = load_series(&cfg, &now)?;
            let series = loaded
                .iter()
                .find(|l| l.series.symbol == symbol)
                .ok_or_else(|| CliError::Other(format!("symbol {symbol} not in config")))?;
            let t = series
                .series
                .bars
                .iter()
                .position(|b| b.timestamp == current.timestamp)
                .ok_or_else(|| CliError::Other(format!("ledger timestamp {} not in data", current.timestamp)))?;
            let news: Vec<_> = load_news(&cfg)?
                .into_iter()
                .filter(|n| n.symbol == symbol && n.timestamp <= current.timestamp)
                .collect();
            let (cash, position) = match row {
                0 => (current.pre_value, 0.0),
                _ => (records[row - 1].cash, records[row - 1].position),
            };
            let history = &records[..row];
            let text = render_prompt(&PromptContext {
                name: name.as_deref().unwrap_or(&symbol),
                symbol: &symbol,
                bars: &series.series.bars[..=t],
                news: &news,
                history,
                valid_actions: history,
                today: current.timestamp,
                price: current.price,
                cash,
                position,
            });
            let _ = write!(stdout, "{text}");
        }
    }
    Ok(())
}

fn read_ledger(path: &Path) -> Result<Vec<crate::envs::StepRecord>, CliError> {
    let bytes = std::fs::read(path).map_err(|e| RunError::io(path, e))?;
    read_ledger_csv(bytes.as_slice()).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}
