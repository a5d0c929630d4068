//! Rule-based rewards and GRPO arithmetic.

use std::ffi::c_char;

use tradelab::rewards::{
    accuracy_reward, composite_reasoning_reward, composite_trading_reward, extract_boxed_answer, format_reward_action,
    format_reward_reasoning, group_advantages, grpo_objective, AnswerType, ClipConfig, RewardWeights,
};

use crate::error::{doubles, guard, into_c_string, utf8, write_out, FfiError, FfiResult, TlStatus};

/// Answer kinds accepted by `tl_accuracy_reward`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlAnswerType {
    Choice = 0,
    MultiChoice = 1,
    Numeric = 2,
    Text = 3,
}

fn answer_type(code: i32) -> FfiResult<AnswerType> {
    Ok(match code {
        0 => AnswerType::Choice,
        1 => AnswerType::MultiChoice,
        2 => AnswerType::Numeric,
        3 => AnswerType::Text,
        other => return Err(FfiError::invalid(format!("unknown answer type {other}"))),
    })
}

fn reward_error(e: tradelab::rewards::RewardError) -> FfiError {
    FfiError::invalid(e.to_string())
}

/// 1.0 when `text` is a well-formed think block followed by a boxed answer,
/// else 0.0.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tl_format_reward_reasoning(text: *const c_char, out: *mut f64) -> TlStatus {
    guard(|| write_out(out, format_reward_reasoning(utf8(text, "text")?), "out"))
}

/// Like `tl_format_reward_reasoning`, and the boxed answer must be exactly
/// BUY, HOLD or SELL.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tl_format_reward_action(text: *const c_char, out: *mut f64) -> TlStatus {
    guard(|| write_out(out, format_reward_action(utf8(text, "text")?), "out"))
}

/// Content of the last balanced `\boxed{...}` in `text` as a newly
/// allocated string; release it with `tl_string_free`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tl_extract_boxed_answer(text: *const c_char, out: *mut *mut c_char) -> TlStatus {
    guard(|| {
        let answer =
            extract_boxed_answer(utf8(text, "text")?).map_err(|e| FfiError::new(TlStatus::Parse, e.to_string()))?;
        if out.is_null() {
            return Err(FfiError::null("out"));
        }
        out.write(into_c_string(answer));
        Ok(())
    })
}

/// 1.0 when `extracted` matches `gold` under the rules of `answer_type`
/// (a `TlAnswerType` value), else 0.0.
///
/// # Safety
/// Both strings must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tl_accuracy_reward(
    extracted: *const c_char,
    gold: *const c_char,
    answer_type: i32,
    out: *mut f64,
) -> TlStatus {
    guard(|| {
        let kind = self::answer_type(answer_type)?;
        write_out(out, accuracy_reward(utf8(extracted, "extracted")?, utf8(gold, "gold")?, kind), "out")
    })
}

/// alpha * format + beta_acc * accuracy.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_composite_reasoning_reward(
    format: f64,
    accuracy: f64,
    alpha: f64,
    beta_acc: f64,
    out: *mut f64,
) -> TlStatus {
    guard(|| {
        let w = RewardWeights { alpha, beta_acc, ..RewardWeights::default() };
        w.validate().map_err(reward_error)?;
        write_out(out, composite_reasoning_reward(format, accuracy, &w), "out")
    })
}

/// gamma * format + (1 - gamma) * trading.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_composite_trading_reward(format: f64, trading: f64, gamma: f64, out: *mut f64) -> TlStatus {
    guard(|| {
        let w = RewardWeights { gamma, ..RewardWeights::default() };
        w.validate().map_err(reward_error)?;
        write_out(out, composite_trading_reward(format, trading, &w), "out")
    })
}

/// Group-normalized advantages of `n` rewards written to `out` (n doubles).
/// `out_degenerate`, when not null, receives 1 if the group standard
/// deviation fell below `std_floor` and every advantage is 0.
///
/// # Safety
/// `rewards` must point to `n` doubles and `out` to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tl_group_advantages(
    rewards: *const f64,
    n: usize,
    std_floor: f64,
    out: *mut f64,
    out_degenerate: *mut i32,
) -> TlStatus {
    guard(|| {
        let set = group_advantages(doubles(rewards, n, "rewards")?, std_floor).map_err(reward_error)?;
        if out.is_null() {
            return Err(FfiError::null("out"));
        }
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&set.values);
        if !out_degenerate.is_null() {
            out_degenerate.write(set.degenerate as i32);
        }
        Ok(())
    })
}

/// Clipped GRPO surrogate. Output `i` owns `lengths[i]` consecutive
/// per-token ratios in `ratios`; `kl` is null or laid out like `ratios`.
///
/// # Safety
/// `lengths` and `advantages` must point to `n_outputs` values, `ratios`
/// (and `kl` when given) to `sum(lengths)` doubles, and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_grpo_objective(
    ratios: *const f64,
    lengths: *const usize,
    n_outputs: usize,
    advantages: *const f64,
    epsilon: f64,
    beta_kl: f64,
    kl: *const f64,
    out: *mut f64,
) -> TlStatus {
    guard(|| {
        if n_outputs > 0 && lengths.is_null() {
            return Err(FfiError::null("lengths"));
        }
        let lengths: &[usize] = if n_outputs == 0 { &[] } else { std::slice::from_raw_parts(lengths, n_outputs) };
        let total = lengths
            .iter()
            .try_fold(0usize, |acc, l| acc.checked_add(*l))
            .ok_or_else(|| FfiError::invalid("lengths overflow"))?;
        let split = |flat: &[f64]| {
            let mut rows = Vec::with_capacity(lengths.len());
            let mut at = 0;
            for &l in lengths {
                rows.push(flat[at..at + l].to_vec());
                at += l;
            }
            rows
        };
        let ratio_rows = split(doubles(ratios, total, "ratios")?);
        let kl_rows = if kl.is_null() { None } else { Some(split(doubles(kl, total, "kl")?)) };
        let adv = doubles(advantages, n_outputs, "advantages")?;
        let cfg = ClipConfig { epsilon, beta_kl };
        let value = grpo_objective(&ratio_rows, adv, &cfg, kl_rows.as_deref()).map_err(reward_error)?;
        write_out(out, value, "out")
    })
}
