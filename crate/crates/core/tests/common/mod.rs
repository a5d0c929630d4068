//! Shared acceptance checks. Each returns a one-line detail on success and
//! the first violation on failure.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use tradelab::envs::{
    episode_return, read_ledger_csv, write_ledger_csv, Action, StepRecord, TradingEnv, TradingEnvConfig,
    DEFAULT_FEE_RATE, DEFAULT_INITIAL_CASH,
};
use tradelab::factors::{compute_alpha158, FactorMatrix, WindowSet};
use tradelab::ingest::{
    apply_scaler, fetch_bars, fit_scaler, Backoff, FetchError, Fetcher, Interval, ProviderConfig, RateLimit,
    DEFAULT_EPSILON,
};
use tradelab::metrics::{arr, mdd, rank_ic_t, MetricReport, PredictionPanel, ReturnSeries};
use tradelab::rewards::{
    composite_reasoning_reward, composite_trading_reward, format_reward_action, format_reward_reasoning,
    group_advantages, grpo_objective, ClipConfig, RewardWeights, DEFAULT_STD_FLOOR,
};
use tradelab::runner::RunReport;
use tradelab::strategies::{buy_and_hold, macd_signals, topk_dropout, MacdParams, ScorePanel, TopkParams};
use tradelab::types::{AssetSeries, Bar, SplitSpec, Timestamp};
use tradelab_oracles::{
    brute_mdd, brute_spearman, naive_rolling, MockProvider, MockResponse, OhlcvColumns, SynthBar, SyntheticPathSpec,
};

pub type Outcome = Result<String, String>;
pub type Check = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub const CRITERIA: &[Check] = &[
    ("alpha158_completeness", alpha158_completeness),
    ("metric_oracle_equivalence", metric_oracle_equivalence),
    ("environment_accounting", environment_accounting),
    ("grpo_math", grpo_math),
    ("reward_functions", reward_functions),
    ("strategy_correctness", strategy_correctness),
    ("ingest_robustness", ingest_robustness),
    ("end_to_end_determinism", end_to_end_determinism),
];

pub const RUNTIME_BUDGET: Duration = Duration::from_secs(60);
pub const ALPHA158_BUDGET: Duration = Duration::from_secs(10);

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn epoch() -> Timestamp {
    "2020-01-01T00:00:00".parse().unwrap()
}

pub fn series_from_closes(symbol: &str, closes: &[f64]) -> AssetSeries {
    let bars = closes
        .iter()
        .enumerate()
        .map(|(i, &c)| Bar {
            timestamp: epoch() + chrono::Duration::days(i as i64),
            open: c,
            high: c,
            low: c,
            close: c,
            volume: 1000.0,
            adjusted_close: None,
        })
        .collect();
    AssetSeries::new(symbol, bars).unwrap()
}

pub fn series_from_synth(symbol: &str, bars: &[SynthBar]) -> AssetSeries {
    let bars = bars
        .iter()
        .enumerate()
        .map(|(i, b)| Bar {
            timestamp: epoch() + chrono::Duration::days(i as i64),
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

pub fn random_walk(rng: &mut StdRng, len: usize) -> Vec<f64> {
    let mut p = 100.0;
    (0..len)
        .map(|_| {
            p *= (rng.gen_range(-0.03..0.03_f64)).exp();
            p
        })
        .collect()
}

fn oracle_mismatches(bars: &[SynthBar], fm: &FactorMatrix, tol: f64) -> Result<usize, String> {
    let cols = |f: fn(&SynthBar) -> f64| bars.iter().map(f).collect::<Vec<_>>();
    let (open, high, low, close, volume) =
        (cols(|b| b.open), cols(|b| b.high), cols(|b| b.low), cols(|b| b.close), cols(|b| b.volume));
    let ohlcv = OhlcvColumns { open: &open, high: &high, low: &low, close: &close, volume: &volume };
    let mut checked = 0;
    for (c, name) in fm.columns().iter().enumerate() {
        let (family, w) = match name.split_once('_') {
            Some((f, w)) => (f, w.parse().unwrap()),
            None => (name.as_str(), 0),
        };
        for (t, exp) in naive_rolling(&ohlcv, family, w).iter().enumerate() {
            match (fm.get(t, c), exp) {
                (Some(g), Some(e)) => {
                    ensure!((g - e).abs() <= tol, "{name} t={t}: {g} vs oracle {e}");
                    checked += 1;
                }
                (None, None) => {}
                (g, e) => return Err(format!("{name} t={t}: validity differs ({g:?} vs {e:?})")),
            }
        }
    }
    Ok(checked)
}

pub fn alpha158_completeness() -> Outcome {
    let started = Instant::now();
    let windows = WindowSet::default();
    ensure!(windows.n_columns() == 145, "default window set gives {} columns", windows.n_columns());
    let mut cells = 0;
    for seed in 0..6 {
        let bars = SyntheticPathSpec::random(200, seed).generate();
        let fm = compute_alpha158(&series_from_synth("X", &bars), &windows).map_err(|e| e.to_string())?;
        ensure!(fm.n_cols() == 145, "seed {seed}: {} columns", fm.n_cols());
        ensure!(fm.n_rows() == 200, "seed {seed}: {} rows", fm.n_rows());
        cells += oracle_mismatches(&bars, &fm, 1e-10)?;
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < ALPHA158_BUDGET, "took {elapsed:?}");
    Ok(format!("145 columns; {cells} cells within 1e-10 of oracle in {:.2}s", elapsed.as_secs_f64()))
}

pub fn metric_oracle_equivalence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst_mdd = 0.0_f64;
    for i in 0..250 {
        let len = rng.gen_range(1..=500);
        let rets: Vec<f64> = (0..len).map(|_| rng.gen_range(-0.05..0.05)).collect();
        let mut values = vec![1.0];
        for r in &rets {
            let v = values.last().unwrap() * (1.0 + r);
            values.push(v);
        }
        let got = mdd(&ReturnSeries::new(rets, 252.0).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let exp = brute_mdd(&values);
        ensure!((got - exp).abs() <= 1e-12, "mdd instance {i}: {got} vs {exp}");
        worst_mdd = worst_mdd.max((got - exp).abs());
    }
    let mut worst_ic = 0.0_f64;
    let mut ics = 0;
    for i in 0..250 {
        let n = rng.gen_range(2..=20);
        let periods = rng.gen_range(1..=500);
        let ties = i % 3 == 0;
        let draw = |rng: &mut StdRng| {
            let x: f64 = rng.gen_range(-1.0..1.0);
            if ties {
                (x * 4.0).round()
            } else {
                x
            }
        };
        let mut pred = Vec::with_capacity(n * periods);
        let mut truth = Vec::with_capacity(n * periods);
        let mut mask = Vec::with_capacity(n * periods);
        for _ in 0..n * periods {
            pred.push(draw(&mut rng));
            truth.push(draw(&mut rng));
            mask.push(rng.gen_bool(0.9));
        }
        let panel =
            PredictionPanel::new(n, periods, pred.clone(), truth.clone(), mask.clone()).map_err(|e| e.to_string())?;
        for t in 0..periods {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for asset in 0..n {
                let k = asset * periods + t;
                if mask[k] {
                    a.push(pred[k]);
                    b.push(truth[k]);
                }
            }
            let exp = if a.len() >= 2 { brute_spearman(&a, &b) } else { None };
            match (rank_ic_t(&panel, t).ok(), exp) {
                (Some(g), Some(e)) => {
                    ensure!((g - e).abs() <= 1e-12, "rank_ic instance {i} t={t}: {g} vs {e}");
                    worst_ic = worst_ic.max((g - e).abs());
                    ics += 1;
                }
                (None, None) => {}
                (g, e) => return Err(format!("rank_ic instance {i} t={t}: definedness differs ({g:?} vs {e:?})")),
            }
        }
    }
    let r = 1.21_f64.powf(1.0 / 252.0) - 1.0;
    let got = arr(&ReturnSeries::new(vec![r; 252], 252.0).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure!((got - 0.21).abs() <= 1e-9, "ARR closed form gave {got}");
    Ok(format!(
        "250 mdd instances (max err {worst_mdd:.1e}); {ics} IC cross-sections over 250 panels (max err {worst_ic:.1e}); ARR={got:.12}"
    ))
}

fn ledger_fees(records: &[StepRecord], lambda: f64) -> f64 {
    let mut fees = 0.0;
    let mut prev_pos = 0.0;
    for r in records {
        fees += lambda * (r.position - prev_pos).abs() * r.price;
        prev_pos = r.position;
    }
    fees
}

pub fn environment_accounting() -> Outcome {
    let defaults = TradingEnvConfig::default();
    ensure!(
        defaults.initial_cash == 1e5 && DEFAULT_INITIAL_CASH == 1e5,
        "default initial cash {}",
        defaults.initial_cash
    );
    ensure!(defaults.fee_rate == 1e-4 && DEFAULT_FEE_RATE == 1e-4, "default fee rate {}", defaults.fee_rate);
    let mut rng = StdRng::seed_from_u64(11);
    let mut worst_wealth = 0.0_f64;
    let mut worst_prod = 0.0_f64;
    let sequences = 1000;
    for i in 0..sequences {
        let steps = rng.gen_range(1..=252);
        let closes = random_walk(&mut rng, steps + 1);
        let lambda = defaults.fee_rate;
        let mut env =
            TradingEnv::new(defaults, Arc::new(series_from_closes("X", &closes))).map_err(|e| e.to_string())?;
        let mut records = Vec::with_capacity(steps);
        let (mut cash, mut pos) = (env.state().cash, env.state().position);
        while !env.is_done() {
            let action = [Action::Buy, Action::Hold, Action::Sell][rng.gen_range(0..3)];
            let (rec, _) = env.step(action).map_err(|e| e.to_string())?;
            let fee = lambda * (rec.position - pos).abs() * rec.price;
            let before = cash + pos * rec.price;
            let after = rec.cash + rec.position * rec.price + fee;
            worst_wealth = worst_wealth.max((before - after).abs());
            ensure!((before - after).abs() <= 1e-6, "sequence {i} {}: wealth {before} vs {after}", rec.timestamp);
            ensure!(rec.pre_value == before, "sequence {i}: pre_value {} vs {before}", rec.pre_value);
            (cash, pos) = (rec.cash, rec.position);
            records.push(rec);
        }
        let mut csv = Vec::new();
        write_ledger_csv(&records, &mut csv).map_err(|e| e.to_string())?;
        let reread = read_ledger_csv(csv.as_slice()).map_err(|e| e.to_string())?;
        let fees = ledger_fees(&reread, lambda);
        ensure!(fees == env.state().fees, "sequence {i}: ledger fees {fees} vs env {}", env.state().fees);
        let prod = reread.iter().fold(1.0, |acc, r| acc * (1.0 + r.ret)) - 1.0;
        let er = episode_return(&reread).map_err(|e| e.to_string())?;
        worst_prod = worst_prod.max((prod - er).abs());
        ensure!((prod - er).abs() <= 1e-9, "sequence {i}: product {prod} vs episode return {er}");
    }
    Ok(format!(
        "{sequences} sequences; wealth err max {worst_wealth:.1e}; fees bit-exact; product err max {worst_prod:.1e}; defaults 1e5 / 1e-4"
    ))
}

pub fn grpo_math() -> Outcome {
    let adv = group_advantages(&[0.0, 2.0], DEFAULT_STD_FLOOR).map_err(|e| e.to_string())?;
    ensure!(adv.values == vec![-1.0, 1.0], "[0,2] gave {:?}", adv.values);
    let flat = group_advantages(&[0.7; 5], DEFAULT_STD_FLOOR).map_err(|e| e.to_string())?;
    ensure!(flat.values == vec![0.0; 5] && flat.degenerate, "equal group gave {:?}", flat.values);
    let cfg = ClipConfig { epsilon: 0.2, beta_kl: 0.0 };
    let up = grpo_objective(&[vec![2.0]], &[1.0], &cfg, None).map_err(|e| e.to_string())?;
    let down = grpo_objective(&[vec![2.0]], &[-1.0], &cfg, None).map_err(|e| e.to_string())?;
    ensure!(up == 1.2, "r=2, A=+1 gave {up}");
    ensure!(down == -2.0, "r=2, A=-1 gave {down}");
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    for i in 0..500 {
        let g = rng.gen_range(2..=16);
        let rewards: Vec<f64> = (0..g).map(|_| rng.gen_range(0.0..1.0)).collect();
        let base = group_advantages(&rewards, DEFAULT_STD_FLOOR).map_err(|e| e.to_string())?;
        let (a, b) = (rng.gen_range(0.1..10.0), rng.gen_range(-5.0..5.0));
        let moved: Vec<f64> = rewards.iter().map(|r| a * r + b).collect();
        let other = group_advantages(&moved, DEFAULT_STD_FLOOR).map_err(|e| e.to_string())?;
        for (x, y) in base.values.iter().zip(&other.values) {
            worst = worst.max((x - y).abs());
            ensure!((x - y).abs() <= 1e-12, "group {i}: {x} vs {y} after {a}*r+{b}");
        }
    }
    Ok(format!("[0,2]->[-1,1]; equal->0; clip 1.2 / -2; 500 affine groups (max err {worst:.1e})"))
}

pub fn reward_functions() -> Outcome {
    let example = "<think>x</think>\\boxed{BUY}";
    ensure!(format_reward_action(example) == 1.0, "template example scored {}", format_reward_action(example));
    ensure!(format_reward_reasoning(example) == 1.0, "reasoning format scored {}", format_reward_reasoning(example));
    ensure!(format_reward_action("\\boxed{BUY}") == 0.0, "missing think block scored 1");
    let w = RewardWeights::default();
    ensure!(w.alpha == 0.1 && w.beta_acc == 0.9 && w.gamma == 0.1, "default weights {w:?}");
    for (f, a) in [(1.0, 1.0), (1.0, 0.0), (0.0, 1.0), (0.0, 0.0)] {
        let got = composite_reasoning_reward(f, a, &w);
        ensure!(got == 0.1 * f + 0.9 * a, "reasoning composite ({f},{a}) gave {got}");
    }
    for (f, t) in [(1.0, 0.02), (0.0, -0.01), (1.0, 0.0)] {
        let got = composite_trading_reward(f, t, &w);
        ensure!(got == 0.1 * f + (1.0 - 0.1) * t, "trading composite ({f},{t}) gave {got}");
    }
    ensure!(composite_reasoning_reward(1.0, 0.0, &w) == 0.1, "format-only reward");
    ensure!(composite_reasoning_reward(0.0, 1.0, &w) == 0.9, "accuracy-only reward");
    Ok("template example -> 1; alpha 0.1, beta 0.9, gamma 0.1 exact".into())
}

fn brute_macd(closes: &[f64], p: &MacdParams) -> Vec<Action> {
    let ema = |xs: &[f64], span: usize| {
        let alpha = 2.0 / (span as f64 + 1.0);
        let mut out = vec![xs[0]];
        for x in &xs[1..] {
            let prev = *out.last().unwrap();
            out.push(alpha * x + (1.0 - alpha) * prev);
        }
        out
    };
    let (fast, slow) = (ema(closes, p.fast), ema(closes, p.slow));
    let dif: Vec<f64> = fast.iter().zip(&slow).map(|(a, b)| a - b).collect();
    let dea = ema(&dif, p.signal);
    let hist: Vec<f64> = dif.iter().zip(&dea).map(|(a, b)| a - b).collect();
    let mut long = false;
    let mut out = vec![Action::Hold; closes.len()];
    for t in p.slow..closes.len() {
        let up = hist[t - 1] <= 0.0 && hist[t] > 0.0;
        let down = hist[t - 1] >= 0.0 && hist[t] < 0.0;
        if up && !long {
            out[t] = Action::Buy;
            long = true;
        } else if down && long {
            out[t] = Action::Sell;
            long = false;
        }
    }
    out
}

fn holdings_by_symbol(panel: &ScorePanel, params: &TopkParams) -> Result<Vec<Vec<String>>, String> {
    let schedule = topk_dropout(panel, params).map_err(|e| e.to_string())?;
    Ok(schedule
        .holdings
        .iter()
        .map(|h| {
            let mut s: Vec<String> = h.iter().map(|&a| panel.symbols()[a].clone()).collect();
            s.sort();
            s
        })
        .collect())
}

pub fn strategy_correctness() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst_bh = 0.0_f64;
    let cfg = TradingEnvConfig { fee_rate: 0.0, ..TradingEnvConfig::default() };
    for i in 0..200 {
        let len = rng.gen_range(2..=300);
        let closes = random_walk(&mut rng, len);
        let mut env = TradingEnv::new(cfg, Arc::new(series_from_closes("X", &closes))).map_err(|e| e.to_string())?;
        let mut records = Vec::new();
        for action in buy_and_hold(closes.len() - 1) {
            records.push(env.step(action).map_err(|e| e.to_string())?.0);
        }
        let got = episode_return(&records).map_err(|e| e.to_string())?;
        let exp = closes[closes.len() - 1] / closes[0] - 1.0;
        worst_bh = worst_bh.max((got - exp).abs());
        ensure!((got - exp).abs() <= 1e-9, "buy&hold path {i}: {got} vs {exp}");
    }

    let params = MacdParams::default();
    let mut crossings = 0;
    for seed in 0..100 {
        let bars = SyntheticPathSpec::random(rng.gen_range(40..=400), 1000 + seed).generate();
        let closes: Vec<f64> = bars.iter().map(|b| b.close).collect();
        let got = macd_signals(&closes, &params).map_err(|e| e.to_string())?.actions;
        let exp = brute_macd(&closes, &params);
        ensure!(got == exp, "macd path {seed}: signals differ from sign-change scan");
        crossings += got.iter().filter(|a| **a != Action::Hold).count();
    }

    let symbols: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
    let worked = ScorePanel::new(
        symbols.clone(),
        vec![vec![Some(3.0), Some(1.0)], vec![Some(2.0), Some(2.0)], vec![Some(1.0), Some(3.0)]],
    )
    .map_err(|e| e.to_string())?;
    let held = holdings_by_symbol(&worked, &TopkParams { k: 2, d: 1 })?;
    ensure!(held == vec![vec!["A", "B"], vec!["B", "C"]], "k=2/d=1 worked case gave {held:?}");

    for trial in 0..50 {
        let n = rng.gen_range(3..=12);
        let periods = rng.gen_range(2..=40);
        let syms: Vec<String> = (0..n).map(|i| format!("S{i:02}")).collect();
        let raw: Vec<Vec<Option<f64>>> =
            (0..n).map(|_| (0..periods).map(|_| Some(rng.gen_range(-2.0..2.0))).collect()).collect();
        let warped: Vec<Vec<Option<f64>>> =
            raw.iter().map(|row| row.iter().map(|s| s.map(|x| (3.0 * x).exp() + 7.0)).collect()).collect();
        let k = rng.gen_range(1..n);
        let params = TopkParams { k, d: rng.gen_range(1..=k) };
        let a = holdings_by_symbol(&ScorePanel::new(syms.clone(), raw).map_err(|e| e.to_string())?, &params)?;
        let b = holdings_by_symbol(&ScorePanel::new(syms, warped).map_err(|e| e.to_string())?, &params)?;
        ensure!(a == b, "top-k trial {trial}: monotone transform changed holdings");
    }
    Ok(format!(
        "buy&hold 200 paths (max err {worst_bh:.1e}); macd 100 paths ({crossings} crossings); top-k worked case and 50 monotone trials"
    ))
}

const TWO_BARS: &str = r#"[
    {"timestamp":"2023-05-01","open":1,"high":2,"low":0.5,"close":1.2,"volume":11},
    {"timestamp":"2023-05-02","open":1,"high":2,"low":0.5,"close":1.5,"volume":10}
]"#;

fn provider_config(url: String, retries: u32) -> ProviderConfig {
    let mut cfg = ProviderConfig::new("mock", url, "test-key");
    cfg.max_retries = retries;
    cfg.backoff = Backoff { base: Duration::from_millis(2), factor: 2.0, max: Duration::from_millis(10), jitter: true };
    cfg.rate_limit = RateLimit { max_requests: 100, window: Duration::from_secs(1) };
    cfg.timeout = Duration::from_secs(5);
    cfg
}

fn year() -> (Timestamp, Timestamp) {
    ("2023-01-01T00:00:00".parse().unwrap(), "2023-12-31T00:00:00".parse().unwrap())
}

/// Transport slack between the client's send instant and the server's
/// receive instant.
pub const TRANSCRIPT_SLACK: Duration = Duration::from_millis(10);

pub fn ingest_retry() -> Outcome {
    let mock = MockProvider::start(vec![MockResponse::new(429, "slow down"), MockResponse::new(200, TWO_BARS)])
        .map_err(|e| e.to_string())?;
    let (s, e) = year();
    let (series, _) = fetch_bars(&provider_config(mock.base_url(), 3), "AAA", Interval::Daily, s, e)
        .map_err(|e| format!("429 then 200 failed: {e}"))?;
    ensure!(series.len() == 2, "decoded {} bars", series.len());
    ensure!(mock.request_count() == 2, "429->200 used {} requests", mock.request_count());
    Ok("429->200 in 2 requests".into())
}

pub fn ingest_exhaustion() -> Outcome {
    let retries = 3;
    let mock = MockProvider::start(vec![MockResponse::new(503, "down")]).map_err(|e| e.to_string())?;
    let (s, e) = year();
    match fetch_bars(&provider_config(mock.base_url(), retries), "AAA", Interval::Daily, s, e) {
        Err(FetchError::RetriesExhausted { attempts, last_status: Some(503), .. }) => {
            ensure!(attempts == retries + 1, "reported {attempts} attempts");
        }
        other => return Err(format!("expected exhaustion, got {other:?}")),
    }
    ensure!(mock.request_count() == retries as usize + 1, "exhaustion used {} requests", mock.request_count());
    Ok(format!("exhaustion after {} requests", retries + 1))
}

pub fn ingest_rate_limit() -> Outcome {
    let limit = RateLimit { max_requests: 3, window: Duration::from_millis(300) };
    let mock = MockProvider::start(vec![MockResponse::new(200, TWO_BARS)]).map_err(|e| e.to_string())?;
    let mut cfg = provider_config(mock.base_url(), 0);
    cfg.rate_limit = limit;
    let fetcher = Fetcher::new(cfg).map_err(|e| e.to_string())?;
    let (s, e) = year();
    for _ in 0..12 {
        fetcher.fetch_bars("AAA", Interval::Daily, s, e).map_err(|e| e.to_string())?;
    }
    let mut stamps: Vec<Instant> = mock.transcript().iter().map(|r| r.at).collect();
    stamps.sort();
    ensure!(stamps.len() == 12, "transcript holds {} requests", stamps.len());
    let m = limit.max_requests as usize;
    let mut tightest = Duration::MAX;
    for i in m..stamps.len() {
        let gap = stamps[i].duration_since(stamps[i - m]);
        tightest = tightest.min(gap);
        ensure!(gap + TRANSCRIPT_SLACK >= limit.window, "{} requests within {gap:?}", m + 1);
    }
    Ok(format!("12 requests, at most {m} per {:?} (tightest {} -> {tightest:?})", limit.window, m + 1))
}

pub fn scaler_leakage() -> Outcome {
    let bars = SyntheticPathSpec::random(240, 21).generate();
    let series = series_from_synth("X", &bars);
    let windows = WindowSet::default();
    let split = SplitSpec { train_end: series.bars[160].timestamp };
    let fm = compute_alpha158(&series, &windows).map_err(|e| e.to_string())?;
    let params = fit_scaler(std::slice::from_ref(&fm), &split, DEFAULT_EPSILON).map_err(|e| e.to_string())?;

    let mut mutated = series.clone();
    for b in &mut mutated.bars[160..] {
        b.close *= 3.0;
        b.high *= 3.0;
        b.open *= 2.5;
        b.low *= 2.0;
        b.volume *= 10.0;
    }
    let fm2 = compute_alpha158(&mutated, &windows).map_err(|e| e.to_string())?;
    let params2 = fit_scaler(std::slice::from_ref(&fm2), &split, DEFAULT_EPSILON).map_err(|e| e.to_string())?;
    ensure!(params == params2, "scaler params changed after mutating test bars");

    let (rows, cols) = (fm.n_rows(), fm.n_cols());
    let values: Vec<f64> = (0..rows)
        .flat_map(|t| (0..cols).map(move |c| (t, c)))
        .map(|(t, c)| if t >= 160 { 1e9 } else { fm.value(t, c) })
        .collect();
    let valid: Vec<bool> =
        (0..rows).flat_map(|t| (0..cols).map(move |c| (t, c))).map(|(t, c)| fm.is_valid(t, c)).collect();
    let fm3 = FactorMatrix::new(fm.symbol().into(), fm.calendar().to_vec(), fm.columns().to_vec(), values, valid)
        .map_err(|e| e.to_string())?;
    let params3 = fit_scaler(std::slice::from_ref(&fm3), &split, DEFAULT_EPSILON).map_err(|e| e.to_string())?;
    ensure!(params == params3, "scaler params changed after mutating test feature rows");
    let scaled = apply_scaler(&fm, &params).map_err(|e| e.to_string())?;
    ensure!(scaled.n_rows() == fm.n_rows(), "scaled matrix lost rows");
    Ok("test-row mutation leaves scaler params bit-identical".into())
}

pub fn ingest_robustness() -> Outcome {
    let parts = [ingest_retry()?, ingest_exhaustion()?, ingest_rate_limit()?, scaler_leakage()?];
    Ok(parts.join("; "))
}

pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn cli(args: &[&str]) -> CliOutput {
    let mut argv = vec!["tradelab"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = tradelab::cli::run(argv, &mut out, &mut err);
    CliOutput { code, stdout: String::from_utf8_lossy(&out).into(), stderr: String::from_utf8_lossy(&err).into() }
}

/// Blanks the run timestamp so two reports can be compared byte for byte.
pub fn mask_timestamps(report: &str, stamp: &str) -> String {
    report.replace(stamp, "<timestamp>")
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        files.push((name, std::fs::read(&path).map_err(|e| e.to_string())?));
    }
    files.sort();
    Ok(files)
}

pub fn backtest_into(config: &Path, out: &Path) -> Result<RunReport, String> {
    let r = cli(&["backtest", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    ensure!(r.code == 0, "backtest exited {}: {}", r.code, r.stderr);
    let text = std::fs::read_to_string(out.join("report.json")).map_err(|e| e.to_string())?;
    RunReport::from_json_str(&text).map_err(|e| e.to_string())
}

pub fn end_to_end_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    let mut recomputed = 0;
    for fixture in ["backtest.toml", "topk.toml"] {
        let config = fixtures().join(fixture);
        let (a, b) = (tmp.path().join(format!("{fixture}-a")), tmp.path().join(format!("{fixture}-b")));
        let ra = backtest_into(&config, &a)?;
        let rb = backtest_into(&config, &b)?;
        let (fa, fb) = (read_dir_sorted(&a)?, read_dir_sorted(&b)?);
        ensure!(fa.len() == fb.len(), "{fixture}: {} vs {} output files", fa.len(), fb.len());
        for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
            ensure!(na == nb, "{fixture}: file sets differ ({na} vs {nb})");
            if na == "report.json" {
                let ta = mask_timestamps(&String::from_utf8_lossy(ba), &ra.generated_at);
                let tb = mask_timestamps(&String::from_utf8_lossy(bb), &rb.generated_at);
                ensure!(ta == tb, "{fixture}: reports differ beyond the timestamp");
            } else {
                ensure!(ba == bb, "{fixture}: {na} differs between runs");
            }
            compared += 1;
        }
        for res in &ra.results {
            let ledger = a.join(&res.ledger);
            let out = cli(&["metrics", "--ledger", ledger.to_str().unwrap(), "--config", config.to_str().unwrap()]);
            ensure!(out.code == 0, "metrics exited {}: {}", out.code, out.stderr);
            let value: serde_json::Value = serde_json::from_str(&out.stdout).map_err(|e| e.to_string())?;
            let report = MetricReport::from_json(&value).map_err(|e| e.to_string())?;
            ensure!(report == res.metrics, "{fixture} {}: recomputed metrics differ from the report", res.id);
            recomputed += 1;
        }
    }
    Ok(format!("{compared} output files identical across runs; {recomputed} ledgers reproduce report metrics exactly"))
}
