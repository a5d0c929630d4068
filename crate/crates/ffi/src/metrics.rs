//! Trading and forecasting metrics by name.

use std::ffi::c_char;

use tradelab::metrics::{MetricError, MetricName, MetricReport, MetricValue, PredictionPanel, ReturnSeries};

use crate::error::{doubles, guard, utf8, write_out, FfiError, FfiResult, TlStatus};

fn metric_name(name: &str) -> FfiResult<MetricName> {
    name.parse().map_err(|e: tradelab::metrics::UnknownMetric| FfiError::invalid(e.to_string()))
}

fn metric_error(e: MetricError) -> FfiError {
    let status = if e.is_undefined() { TlStatus::Undefined } else { TlStatus::InvalidArgument };
    FfiError::new(status, e.to_string())
}

fn single(report: &MetricReport, name: MetricName) -> FfiResult<f64> {
    match report.get(name) {
        Some(MetricValue::Value(v)) => Ok(*v),
        Some(MetricValue::Undefined(why)) => Err(FfiError::new(TlStatus::Undefined, why.clone())),
        None => Err(FfiError::invalid(format!("{} is not available here", name.as_str()))),
    }
}

/// Trading metric `name` (ARR, SR, MDD, CR, SoR, VOL or DD, case-insensitive)
/// of `n` simple per-period returns. Percent metrics are fractions.
/// Returns `TL_STATUS_UNDEFINED` when the metric has no value for this series.
///
/// # Safety
/// `name` must be a NUL-terminated string, `rets` must point to `n` doubles
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_trading_metric(
    name: *const c_char,
    rets: *const f64,
    n: usize,
    periods_per_year: f64,
    risk_free: f64,
    out: *mut f64,
) -> TlStatus {
    guard(|| {
        let name = metric_name(utf8(name, "name")?)?;
        if !MetricName::TRADING.contains(&name) {
            return Err(FfiError::invalid(format!("{} is not a trading metric", name.as_str())));
        }
        let rets = doubles(rets, n, "rets")?.to_vec();
        let rs = ReturnSeries::with_risk_free(rets, periods_per_year, risk_free).map_err(metric_error)?;
        let report = MetricReport::trading(&rs, &[name]).map_err(metric_error)?;
        write_out(out, single(&report, name)?, "out")
    })
}

/// Forecasting metric `name` (MAE, MSE, RankIC or RankICIR) over an
/// asset-major `n_assets` x `n_periods` grid. `mask` may be null (every
/// cell present); otherwise a nonzero byte marks a present cell.
///
/// # Safety
/// `pred` and `truth` must point to `n_assets * n_periods` doubles, `mask`
/// to as many bytes when not null, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_forecast_metric(
    name: *const c_char,
    pred: *const f64,
    truth: *const f64,
    mask: *const u8,
    n_assets: usize,
    n_periods: usize,
    out: *mut f64,
) -> TlStatus {
    guard(|| {
        let name = metric_name(utf8(name, "name")?)?;
        if !MetricName::FORECASTING.contains(&name) {
            return Err(FfiError::invalid(format!("{} is not a forecasting metric", name.as_str())));
        }
        let cells = n_assets.checked_mul(n_periods).ok_or_else(|| FfiError::invalid("grid too large"))?;
        let pred = doubles(pred, cells, "pred")?.to_vec();
        let truth = doubles(truth, cells, "truth")?.to_vec();
        let mask = if mask.is_null() {
            vec![true; cells]
        } else {
            std::slice::from_raw_parts(mask, cells).iter().map(|b| *b != 0).collect()
        };
        let panel = PredictionPanel::new(n_assets, n_periods, pred, truth, mask).map_err(metric_error)?;
        let report = MetricReport::forecasting(&panel, &[name]).map_err(metric_error)?;
        write_out(out, single(&report, name)?, "out")
    })
}
