//! Opaque handle over an Alpha158 factor matrix.

use std::ffi::{c_char, CString};
use std::panic::AssertUnwindSafe;

use tradelab::factors::{compute_alpha158, FactorMatrix, WindowSet};
use tradelab::ingest::parse_ohlcv_csv;

use crate::error::{guard, utf8, write_out, FfiError, TlStatus};

/// Factor matrix with column names kept as C strings.
pub struct TlFactorMatrix {
    matrix: FactorMatrix,
    names: Vec<CString>,
}

unsafe fn handle<'a>(fm: *const TlFactorMatrix) -> Result<&'a TlFactorMatrix, FfiError> {
    fm.as_ref().ok_or_else(|| FfiError::null("matrix"))
}

/// Alpha158 features of an OHLCV CSV file over `n_windows` rolling windows
/// (null and 0 select the default set 5, 10, 20, 30, 60). Free with
/// `tl_factors_free`.
///
/// # Safety
/// `path` and `symbol` must be NUL-terminated strings, `windows` must point
/// to `n_windows` values when not null, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_factors_from_csv(
    path: *const c_char,
    symbol: *const c_char,
    windows: *const usize,
    n_windows: usize,
    out: *mut *mut TlFactorMatrix,
) -> TlStatus {
    guard(|| {
        if out.is_null() {
            return Err(FfiError::null("out"));
        }
        let path = utf8(path, "path")?;
        let symbol = utf8(symbol, "symbol")?;
        let windows = if windows.is_null() || n_windows == 0 {
            WindowSet::default()
        } else {
            WindowSet::new(std::slice::from_raw_parts(windows, n_windows).to_vec())
                .map_err(|e| FfiError::invalid(e.to_string()))?
        };
        let bytes = std::fs::read(path).map_err(|e| FfiError::new(TlStatus::Io, format!("{path}: {e}")))?;
        let series =
            parse_ohlcv_csv(&bytes, symbol).map_err(|e| FfiError::new(TlStatus::Parse, format!("{path}: {e}")))?;
        let matrix = compute_alpha158(&series, &windows).map_err(|e| FfiError::invalid(e.to_string()))?;
        let names = matrix.columns().iter().map(|c| CString::new(c.as_str()).unwrap_or_default()).collect();
        out.write(Box::into_raw(Box::new(TlFactorMatrix { matrix, names })));
        Ok(())
    })
}

/// Releases a factor matrix. Null is ignored.
///
/// # Safety
/// `fm` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_factors_free(fm: *mut TlFactorMatrix) {
    if !fm.is_null() {
        drop(Box::from_raw(fm));
    }
}

/// Row (bar) and column (feature) counts.
///
/// # Safety
/// `fm` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_factors_shape(
    fm: *const TlFactorMatrix,
    out_rows: *mut usize,
    out_cols: *mut usize,
) -> TlStatus {
    guard(AssertUnwindSafe(|| {
        let h = handle(fm)?;
        write_out(out_rows, h.matrix.n_rows(), "out_rows")?;
        write_out(out_cols, h.matrix.n_cols(), "out_cols")
    }))
}

/// Name of column `col`, owned by the matrix. Null when out of range.
///
/// # Safety
/// `fm` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_factors_column_name(fm: *const TlFactorMatrix, col: usize) -> *const c_char {
    match fm.as_ref().and_then(|h| h.names.get(col)) {
        Some(name) => name.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Feature value at (`row`, `col`). Returns `TL_STATUS_UNDEFINED` while the
/// rolling window is still warming up or the value is not finite.
///
/// # Safety
/// `fm` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tl_factors_value(
    fm: *const TlFactorMatrix,
    row: usize,
    col: usize,
    out: *mut f64,
) -> TlStatus {
    guard(AssertUnwindSafe(|| {
        let h = handle(fm)?;
        let m = &h.matrix;
        if row >= m.n_rows() || col >= m.n_cols() {
            return Err(FfiError::invalid(format!("cell ({row}, {col}) outside {}x{}", m.n_rows(), m.n_cols())));
        }
        match m.get(row, col) {
            Some(v) => write_out(out, v, "out"),
            None => Err(FfiError::new(TlStatus::Undefined, format!("{} has no value at row {row}", m.columns()[col]))),
        }
    }))
}
