//! Status codes, the per-thread last-error message and the panic guard
//! every exported function runs under.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};

/// Result of every fallible call. On anything but `TL_STATUS_OK` a message
/// is available from `tl_last_error_message` on the same thread.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The value is mathematically undefined for this input (for example a
    /// Sharpe ratio of a flat series); the output is left untouched.
    Undefined = 3,
    EpisodeDone = 4,
    Io = 5,
    Parse = 6,
    Panic = 7,
}

#[derive(Debug)]
pub(crate) struct FfiError {
    pub status: TlStatus,
    pub message: String,
}

impl FfiError {
    pub fn new(status: TlStatus, message: impl Into<String>) -> Self {
        FfiError { status, message: message.into() }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        FfiError::new(TlStatus::InvalidArgument, message)
    }

    pub fn null(what: &str) -> Self {
        FfiError::new(TlStatus::NullPointer, format!("{what} is null"))
    }
}

pub(crate) type FfiResult<T> = Result<T, FfiError>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into a status code.
pub(crate) fn guard<F>(f: F) -> TlStatus
where
    F: FnOnce() -> FfiResult<()> + UnwindSafe,
{
    match catch_unwind(f) {
        Ok(Ok(())) => TlStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(&e.message);
            e.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            TlStatus::Panic
        }
    }
}

/// Borrows `n` doubles; a null pointer is accepted only when `n` is 0.
///
/// # Safety
/// `ptr` must point to `n` readable doubles that outlive `'a`.
pub(crate) unsafe fn doubles<'a>(ptr: *const f64, n: usize, what: &str) -> FfiResult<&'a [f64]> {
    if n == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(FfiError::null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, n))
}

/// # Safety
/// `ptr` must be null or a NUL-terminated string that outlives `'a`.
pub(crate) unsafe fn utf8<'a>(ptr: *const c_char, what: &str) -> FfiResult<&'a str> {
    if ptr.is_null() {
        return Err(FfiError::null(what));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| FfiError::invalid(format!("{what} is not valid UTF-8")))
}

/// # Safety
/// `out` must be null or valid for a write of `T`.
pub(crate) unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(FfiError::null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the most recent failure on the calling thread, or null when
/// no call has failed yet. The pointer stays valid until the next failing
/// call on this thread.
#[no_mangle]
pub extern "C" fn tl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Static, human-readable name of a status code; "unknown" for values
/// outside `TlStatus`.
#[no_mangle]
pub extern "C" fn tl_status_name(status: i32) -> *const c_char {
    let name: &'static CStr = match status {
        0 => c"ok",
        1 => c"null pointer",
        2 => c"invalid argument",
        3 => c"undefined",
        4 => c"episode done",
        5 => c"io error",
        6 => c"parse error",
        7 => c"panic",
        _ => c"unknown",
    };
    name.as_ptr()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn tl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

pub(crate) fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}
