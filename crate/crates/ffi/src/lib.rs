//! C ABI over the `tradelab` engine.
//!
//! Every fallible function returns a [`TlStatus`] and writes results through
//! out-pointers; on failure `tl_last_error_message` describes the problem.
//! Handles are opaque, created by a `*_from_*` constructor and released by
//! the matching `*_free`. Strings returned by the library are freed with
//! `tl_string_free`.

mod env;
mod error;
mod factors;
mod metrics;
mod rewards;

pub use env::{
    tl_env_free, tl_env_from_closes, tl_env_from_csv, tl_env_is_done, tl_env_len, tl_env_render_prompt, tl_env_reset,
    tl_env_state, tl_env_step, TlAction, TlEnvState, TlStepRecord, TlTradingEnv,
};
pub use error::{tl_last_error_message, tl_status_name, tl_string_free, TlStatus};
pub use factors::{
    tl_factors_column_name, tl_factors_free, tl_factors_from_csv, tl_factors_shape, tl_factors_value, TlFactorMatrix,
};
pub use metrics::{tl_forecast_metric, tl_trading_metric};
pub use rewards::{
    tl_accuracy_reward, tl_composite_reasoning_reward, tl_composite_trading_reward, tl_extract_boxed_answer,
    tl_format_reward_action, tl_format_reward_reasoning, tl_group_advantages, tl_grpo_objective, TlAnswerType,
};

use std::ffi::c_char;

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
