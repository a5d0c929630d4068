//! Opaque handle over the single-asset trading environment.

use std::ffi::c_char;
use std::panic::AssertUnwindSafe;
use std::sync::Arc;

use tradelab::envs::{Action, EnvError, StepRecord, TradingEnv, TradingEnvConfig};
use tradelab::ingest::parse_ohlcv_csv;
use tradelab::types::{AssetSeries, Bar, Timestamp};

use crate::error::{doubles, guard, into_c_string, utf8, write_out, FfiError, FfiResult, TlStatus};

/// Action codes accepted by `tl_env_step`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlAction {
    Sell = -1,
    Hold = 0,
    Buy = 1,
}

/// Account after a step. The holdings are those after the trade; the
/// values and return are marked at the next bar's price.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlStepRecord {
    /// Bar the trade executed at, seconds since the Unix epoch (UTC).
    pub timestamp: i64,
    pub price: f64,
    pub cash: f64,
    pub position: f64,
    pub pre_value: f64,
    pub post_value: f64,
    pub ret: f64,
    /// A `TlAction` value.
    pub action: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlEnvState {
    /// Index of the current bar.
    pub t: usize,
    pub cash: f64,
    pub position: f64,
    /// Cumulative fees paid.
    pub fees: f64,
}

/// Environment plus the records it has produced since the last reset.
pub struct TlTradingEnv {
    env: TradingEnv,
    history: Vec<StepRecord>,
}

fn env_error(e: EnvError) -> FfiError {
    let status = match e {
        EnvError::EpisodeDone(_) => TlStatus::EpisodeDone,
        _ => TlStatus::InvalidArgument,
    };
    FfiError::new(status, e.to_string())
}

fn action_code(a: Action) -> i32 {
    match a {
        Action::Sell => TlAction::Sell as i32,
        Action::Hold => TlAction::Hold as i32,
        Action::Buy => TlAction::Buy as i32,
    }
}

fn to_c(r: &StepRecord) -> TlStepRecord {
    TlStepRecord {
        timestamp: r.timestamp.and_utc().timestamp(),
        price: r.price,
        cash: r.cash,
        position: r.position,
        pre_value: r.pre_value,
        post_value: r.post_value,
        ret: r.ret,
        action: action_code(r.action),
    }
}

fn boxed(series: AssetSeries, initial_cash: f64, fee_rate: f64, out: *mut *mut TlTradingEnv) -> FfiResult<()> {
    let config = TradingEnvConfig { initial_cash, fee_rate, ..TradingEnvConfig::default() };
    let env = TradingEnv::new(config, Arc::new(series)).map_err(env_error)?;
    let handle = Box::into_raw(Box::new(TlTradingEnv { env, history: Vec::new() }));
    // SAFETY: callers check `out` before building the series.
    unsafe { out.write(handle) };
    Ok(())
}

unsafe fn handle<'a>(env: *mut TlTradingEnv) -> FfiResult<&'a mut TlTradingEnv> {
    env.as_mut().ok_or_else(|| FfiError::null("env"))
}

/// Environment over `n` closes on consecutive days from 1970-01-01, with
/// open = high = low = close. Free with `tl_env_free`.
///
/// # Safety
/// `closes` must point to `n` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_env_from_closes(
    closes: *const f64,
    n: usize,
    initial_cash: f64,
    fee_rate: f64,
    out: *mut *mut TlTradingEnv,
) -> TlStatus {
    guard(|| {
        if out.is_null() {
            return Err(FfiError::null("out"));
        }
        let epoch: Timestamp = chrono::DateTime::UNIX_EPOCH.naive_utc();
        let bars = doubles(closes, n, "closes")?
            .iter()
            .enumerate()
            .map(|(i, &c)| Bar {
                timestamp: epoch + chrono::Duration::days(i as i64),
                open: c,
                high: c,
                low: c,
                close: c,
                volume: 0.0,
                adjusted_close: None,
            })
            .collect();
        let series = AssetSeries::new("SERIES", bars).map_err(|e| FfiError::invalid(e.to_string()))?;
        boxed(series, initial_cash, fee_rate, out)
    })
}

/// Environment over an OHLCV CSV file. Free with `tl_env_free`.
///
/// # Safety
/// `path` and `symbol` must be NUL-terminated strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tl_env_from_csv(
    path: *const c_char,
    symbol: *const c_char,
    initial_cash: f64,
    fee_rate: f64,
    out: *mut *mut TlTradingEnv,
) -> TlStatus {
    guard(|| {
        if out.is_null() {
            return Err(FfiError::null("out"));
        }
        let path = utf8(path, "path")?;
        let symbol = utf8(symbol, "symbol")?;
        let bytes = std::fs::read(path).map_err(|e| FfiError::new(TlStatus::Io, format!("{path}: {e}")))?;
        let series =
            parse_ohlcv_csv(&bytes, symbol).map_err(|e| FfiError::new(TlStatus::Parse, format!("{path}: {e}")))?;
        boxed(series, initial_cash, fee_rate, out)
    })
}

/// Releases an environment. Null is ignored.
///
/// # Safety
/// `env` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_env_free(env: *mut TlTradingEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Rewinds to the first bar with the initial cash and clears the history.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_env_reset(env: *mut TlTradingEnv) -> TlStatus {
    guard(AssertUnwindSafe(|| {
        let h = handle(env)?;
        h.env.reset();
        h.history.clear();
        Ok(())
    }))
}

/// Executes `action` (a `TlAction` value) at the current bar and advances.
/// `out_record` and `out_reward` may each be null.
///
/// # Safety
/// `env` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_env_step(
    env: *mut TlTradingEnv,
    action: i32,
    out_record: *mut TlStepRecord,
    out_reward: *mut f64,
) -> TlStatus {
    guard(AssertUnwindSafe(|| {
        let h = handle(env)?;
        let action = match action {
            -1 => Action::Sell,
            0 => Action::Hold,
            1 => Action::Buy,
            other => return Err(FfiError::invalid(format!("unknown action {other}"))),
        };
        let (record, reward) = h.env.step(action).map_err(env_error)?;
        if !out_record.is_null() {
            out_record.write(to_c(&record));
        }
        if !out_reward.is_null() {
            out_reward.write(reward);
        }
        h.history.push(record);
        Ok(())
    }))
}

/// Current account state.
///
/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tl_env_state(env: *const TlTradingEnv, out: *mut TlEnvState) -> TlStatus {
    guard(AssertUnwindSafe(|| {
        let h = env.as_ref().ok_or_else(|| FfiError::null("env"))?;
        let s = h.env.state();
        write_out(out, TlEnvState { t: s.t, cash: s.cash, position: s.position, fees: s.fees }, "out")
    }))
}

/// Writes 1 when no further step is possible, else 0.
///
/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tl_env_is_done(env: *const TlTradingEnv, out: *mut i32) -> TlStatus {
    guard(AssertUnwindSafe(|| {
        let h = env.as_ref().ok_or_else(|| FfiError::null("env"))?;
        write_out(out, h.env.is_done() as i32, "out")
    }))
}

/// Number of bars in the episode.
///
/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tl_env_len(env: *const TlTradingEnv, out: *mut usize) -> TlStatus {
    guard(AssertUnwindSafe(|| {
        let h = env.as_ref().ok_or_else(|| FfiError::null("env"))?;
        write_out(out, h.env.series().len(), "out")
    }))
}

/// Decision prompt for the current bar, built from the bars seen so far
/// and the steps taken since the last reset. Release with `tl_string_free`.
///
/// # Safety
/// `env` must be a live handle, `name` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn tl_env_render_prompt(
    env: *const TlTradingEnv,
    name: *const c_char,
    out: *mut *mut c_char,
) -> TlStatus {
    guard(AssertUnwindSafe(|| {
        let h = env.as_ref().ok_or_else(|| FfiError::null("env"))?;
        let prompt = h.env.render_prompt(utf8(name, "name")?, &h.history);
        write_out(out, into_c_string(prompt), "out")
    }))
}
