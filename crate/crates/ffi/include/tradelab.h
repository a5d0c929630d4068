#ifndef TRADELAB_H
#define TRADELAB_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Action codes accepted by `tl_env_step`.
 */
typedef enum TlAction {
  TL_ACTION_SELL = -1,
  TL_ACTION_HOLD = 0,
  TL_ACTION_BUY = 1,
} TlAction;

/**
 * Answer kinds accepted by `tl_accuracy_reward`.
 */
typedef enum TlAnswerType {
  TL_ANSWER_TYPE_CHOICE = 0,
  TL_ANSWER_TYPE_MULTI_CHOICE = 1,
  TL_ANSWER_TYPE_NUMERIC = 2,
  TL_ANSWER_TYPE_TEXT = 3,
} TlAnswerType;

/**
 * Result of every fallible call. On anything but `TL_STATUS_OK` a message
 * is available from `tl_last_error_message` on the same thread.
 */
typedef enum TlStatus {
  TL_STATUS_OK = 0,
  TL_STATUS_NULL_POINTER = 1,
  TL_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The value is mathematically undefined for this input (for example a
   * Sharpe ratio of a flat series); the output is left untouched.
   */
  TL_STATUS_UNDEFINED = 3,
  TL_STATUS_EPISODE_DONE = 4,
  TL_STATUS_IO = 5,
  TL_STATUS_PARSE = 6,
  TL_STATUS_PANIC = 7,
} TlStatus;

/**
 * Factor matrix with column names kept as C strings.
 */
typedef struct TlFactorMatrix TlFactorMatrix;

/**
 * Environment plus the records it has produced since the last reset.
 */
typedef struct TlTradingEnv TlTradingEnv;

/**
 * Account after a step. The holdings are those after the trade; the
 * values and return are marked at the next bar's price.
 */
typedef struct TlStepRecord {
  /**
   * Bar the trade executed at, seconds since the Unix epoch (UTC).
   */
  int64_t timestamp;
  double price;
  double cash;
  double position;
  double pre_value;
  double post_value;
  double ret;
  /**
   * A `TlAction` value.
   */
  int32_t action;
} TlStepRecord;

typedef struct TlEnvState {
  /**
   * Index of the current bar.
   */
  size_t t;
  double cash;
  double position;
  /**
   * Cumulative fees paid.
   */
  double fees;
} TlEnvState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tl_version(void);

/**
 * Environment over `n` closes on consecutive days from 1970-01-01, with
 * open = high = low = close. Free with `tl_env_free`.
 *
 * # Safety
 * `closes` must point to `n` doubles and `out` be writable.
 */
enum TlStatus tl_env_from_closes(const double *closes,
                                 size_t n,
                                 double initial_cash,
                                 double fee_rate,
                                 struct TlTradingEnv **out);

/**
 * Environment over an OHLCV CSV file. Free with `tl_env_free`.
 *
 * # Safety
 * `path` and `symbol` must be NUL-terminated strings and `out` writable.
 */
enum TlStatus tl_env_from_csv(const char *path,
                              const char *symbol,
                              double initial_cash,
                              double fee_rate,
                              struct TlTradingEnv **out);

/**
 * Releases an environment. Null is ignored.
 *
 * # Safety
 * `env` must be null or a handle from this library not yet freed.
 */
void tl_env_free(struct TlTradingEnv *env);

/**
 * Rewinds to the first bar with the initial cash and clears the history.
 *
 * # Safety
 * `env` must be a live handle.
 */
enum TlStatus tl_env_reset(struct TlTradingEnv *env);

/**
 * Executes `action` (a `TlAction` value) at the current bar and advances.
 * `out_record` and `out_reward` may each be null.
 *
 * # Safety
 * `env` must be a live handle; non-null outputs must be writable.
 */
enum TlStatus tl_env_step(struct TlTradingEnv *env,
                          int32_t action,
                          struct TlStepRecord *out_record,
                          double *out_reward);

/**
 * Current account state.
 *
 * # Safety
 * `env` must be a live handle and `out` writable.
 */
enum TlStatus tl_env_state(const struct TlTradingEnv *env, struct TlEnvState *out);

/**
 * Writes 1 when no further step is possible, else 0.
 *
 * # Safety
 * `env` must be a live handle and `out` writable.
 */
enum TlStatus tl_env_is_done(const struct TlTradingEnv *env, int32_t *out);

/**
 * Number of bars in the episode.
 *
 * # Safety
 * `env` must be a live handle and `out` writable.
 */
enum TlStatus tl_env_len(const struct TlTradingEnv *env, size_t *out);

/**
 * Decision prompt for the current bar, built from the bars seen so far
 * and the steps taken since the last reset. Release with `tl_string_free`.
 *
 * # Safety
 * `env` must be a live handle, `name` a NUL-terminated string and `out`
 * writable.
 */
enum TlStatus tl_env_render_prompt(const struct TlTradingEnv *env, const char *name, char **out);

/**
 * Message of the most recent failure on the calling thread, or null when
 * no call has failed yet. The pointer stays valid until the next failing
 * call on this thread.
 */
const char *tl_last_error_message(void);

/**
 * Static, human-readable name of a status code; "unknown" for values
 * outside `TlStatus`.
 */
const char *tl_status_name(int32_t status);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a pointer obtained from this library that has not
 * been freed yet.
 */
void tl_string_free(char *s);

/**
 * Alpha158 features of an OHLCV CSV file over `n_windows` rolling windows
 * (null and 0 select the default set 5, 10, 20, 30, 60). Free with
 * `tl_factors_free`.
 *
 * # Safety
 * `path` and `symbol` must be NUL-terminated strings, `windows` must point
 * to `n_windows` values when not null, and `out` must be writable.
 */
enum TlStatus tl_factors_from_csv(const char *path,
                                  const char *symbol,
                                  const size_t *windows,
                                  size_t n_windows,
                                  struct TlFactorMatrix **out);

/**
 * Releases a factor matrix. Null is ignored.
 *
 * # Safety
 * `fm` must be null or a handle from this library not yet freed.
 */
void tl_factors_free(struct TlFactorMatrix *fm);

/**
 * Row (bar) and column (feature) counts.
 *
 * # Safety
 * `fm` must be a live handle; outputs must be writable.
 */
enum TlStatus tl_factors_shape(const struct TlFactorMatrix *fm, size_t *out_rows, size_t *out_cols);

/**
 * Name of column `col`, owned by the matrix. Null when out of range.
 *
 * # Safety
 * `fm` must be null or a live handle.
 */
const char *tl_factors_column_name(const struct TlFactorMatrix *fm, size_t col);

/**
 * Feature value at (`row`, `col`). Returns `TL_STATUS_UNDEFINED` while the
 * rolling window is still warming up or the value is not finite.
 *
 * # Safety
 * `fm` must be a live handle and `out` writable.
 */
enum TlStatus tl_factors_value(const struct TlFactorMatrix *fm,
                               size_t row,
                               size_t col,
                               double *out);

/**
 * Trading metric `name` (ARR, SR, MDD, CR, SoR, VOL or DD, case-insensitive)
 * of `n` simple per-period returns. Percent metrics are fractions.
 * Returns `TL_STATUS_UNDEFINED` when the metric has no value for this series.
 *
 * # Safety
 * `name` must be a NUL-terminated string, `rets` must point to `n` doubles
 * and `out` must be writable.
 */
enum TlStatus tl_trading_metric(const char *name,
                                const double *rets,
                                size_t n,
                                double periods_per_year,
                                double risk_free,
                                double *out);

/**
 * Forecasting metric `name` (MAE, MSE, RankIC or RankICIR) over an
 * asset-major `n_assets` x `n_periods` grid. `mask` may be null (every
 * cell present); otherwise a nonzero byte marks a present cell.
 *
 * # Safety
 * `pred` and `truth` must point to `n_assets * n_periods` doubles, `mask`
 * to as many bytes when not null, and `out` must be writable.
 */
enum TlStatus tl_forecast_metric(const char *name,
                                 const double *pred,
                                 const double *truth,
                                 const uint8_t *mask,
                                 size_t n_assets,
                                 size_t n_periods,
                                 double *out);

/**
 * 1.0 when `text` is a well-formed think block followed by a boxed answer,
 * else 0.0.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` writable.
 */
enum TlStatus tl_format_reward_reasoning(const char *text, double *out);

/**
 * Like `tl_format_reward_reasoning`, and the boxed answer must be exactly
 * BUY, HOLD or SELL.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` writable.
 */
enum TlStatus tl_format_reward_action(const char *text, double *out);

/**
 * Content of the last balanced `\boxed{...}` in `text` as a newly
 * allocated string; release it with `tl_string_free`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` writable.
 */
enum TlStatus tl_extract_boxed_answer(const char *text, char **out);

/**
 * 1.0 when `extracted` matches `gold` under the rules of `answer_type`
 * (a `TlAnswerType` value), else 0.0.
 *
 * # Safety
 * Both strings must be NUL-terminated and `out` writable.
 */
enum TlStatus tl_accuracy_reward(const char *extracted,
                                 const char *gold,
                                 int32_t answer_type,
                                 double *out);

/**
 * alpha * format + beta_acc * accuracy.
 *
 * # Safety
 * `out` must be writable.
 */
enum TlStatus tl_composite_reasoning_reward(double format,
                                            double accuracy,
                                            double alpha,
                                            double beta_acc,
                                            double *out);

/**
 * gamma * format + (1 - gamma) * trading.
 *
 * # Safety
 * `out` must be writable.
 */
enum TlStatus tl_composite_trading_reward(double format, double trading, double gamma, double *out);

/**
 * Group-normalized advantages of `n` rewards written to `out` (n doubles).
 * `out_degenerate`, when not null, receives 1 if the group standard
 * deviation fell below `std_floor` and every advantage is 0.
 *
 * # Safety
 * `rewards` must point to `n` doubles and `out` to `n` writable doubles.
 */
enum TlStatus tl_group_advantages(const double *rewards,
                                  size_t n,
                                  double std_floor,
                                  double *out,
                                  int32_t *out_degenerate);

/**
 * Clipped GRPO surrogate. Output `i` owns `lengths[i]` consecutive
 * per-token ratios in `ratios`; `kl` is null or laid out like `ratios`.
 *
 * # Safety
 * `lengths` and `advantages` must point to `n_outputs` values, `ratios`
 * (and `kl` when given) to `sum(lengths)` doubles, and `out` be writable.
 */
enum TlStatus tl_grpo_objective(const double *ratios,
                                const size_t *lengths,
                                size_t n_outputs,
                                const double *advantages,
                                double epsilon,
                                double beta_kl,
                                const double *kl,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRADELAB_H */
