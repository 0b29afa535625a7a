#ifndef THRESHOLD_KW_H
#define THRESHOLD_KW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TkwStatus {
  TKW_STATUS_OK = 0,
  TKW_STATUS_NULL_POINTER = 1,
  TKW_STATUS_INVALID_ARGUMENT = 2,
  TKW_STATUS_TOO_SHORT = 3,
  TKW_STATUS_NO_THRESHOLD = 4,
  TKW_STATUS_RUNTIME = 5,
  TKW_STATUS_PANIC = 6,
} TkwStatus;

typedef enum TkwSeries {
  TKW_SERIES_H = 0,
  TKW_SERIES_EPS = 1,
  TKW_SERIES_ETA = 2,
  TKW_SERIES_NU = 3,
} TkwSeries;

typedef enum TkwKind {
  TKW_KIND_UNIVARIATE = 0,
  TKW_KIND_VOLATILITY = 1,
} TkwKind;

typedef enum TkwDirection {
  TKW_DIRECTION_ABOVE = 0,
  TKW_DIRECTION_BELOW = 1,
} TkwDirection;

typedef enum TkwScaling {
  TKW_SCALING_NONE = 0,
  TKW_SCALING_STDEV = 1,
  TKW_SCALING_STDEV5 = 2,
} TkwScaling;

typedef enum TkwStepOrigin {
  TKW_STEP_ORIGIN_DATA_TIME = 0,
  TKW_STEP_ORIGIN_FIRST_UPDATE = 1,
} TkwStepOrigin;

/**
 * Simulated return path.
 */
typedef struct TkwPath TkwPath;

/**
 * Learned thresholds, one entry per time step from `start_t`.
 */
typedef struct TkwTrajectory TkwTrajectory;

/**
 * Learner settings; obtain defaults from [`tkw_learner_config_default`].
 */
typedef struct TkwLearnerConfig {
  enum TkwKind kind;
  enum TkwDirection direction;
  double p;
  double q;
  double p2;
  double q2;
  enum TkwScaling scaling;
  double theta2_min;
  double theta2_max;
  enum TkwStepOrigin step_origin;
} TkwLearnerConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tkw_version(void);

/**
 * Message of the last failure on this thread; valid until the next call
 * into the library from the same thread. Empty if nothing failed yet.
 */
const char *tkw_last_error_message(void);

/**
 * Simulates `t_len` steps of `H_t = μ + α H_{t-1} + σ ε_t`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum TkwStatus tkw_simulate_ar1(double mu,
                                double alpha,
                                double sigma,
                                size_t t_len,
                                uint64_t seed,
                                struct TkwPath **out);

/**
 * Simulates the moving average with coefficients `b0 (1 + j)^-b`, truncated
 * at `lags`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum TkwStatus tkw_simulate_ma(double mu,
                               double b0,
                               double b,
                               size_t lags,
                               size_t t_len,
                               uint64_t seed,
                               struct TkwPath **out);

/**
 * Simulates the stochastic-volatility model; the path carries `ν`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum TkwStatus tkw_simulate_dgsv(double mu,
                                 double alpha,
                                 double sigma,
                                 double rho,
                                 double b0,
                                 double b,
                                 size_t lags,
                                 size_t t_len,
                                 uint64_t seed,
                                 struct TkwPath **out);

/**
 * Number of observations, 0 for a null handle.
 *
 * # Safety
 * `path` must be null or a live handle.
 */
size_t tkw_path_len(const struct TkwPath *path);

/**
 * Whether the path carries `η` and `ν`.
 *
 * # Safety
 * `path` must be null or a live handle.
 */
bool tkw_path_has_volatility(const struct TkwPath *path);

/**
 * Copies one series into `buf`, which must hold `tkw_path_len` values.
 *
 * # Safety
 * `path` must be a live handle and `buf` valid for `len` writes.
 */
enum TkwStatus tkw_path_copy(const struct TkwPath *path,
                             enum TkwSeries series,
                             double *buf,
                             size_t len);

/**
 * # Safety
 * `path` must be null or a handle not yet freed.
 */
void tkw_path_free(struct TkwPath *path);

struct TkwLearnerConfig tkw_learner_config_default(void);

/**
 * Runs the online learner along `path`.
 *
 * # Safety
 * `path` and `config` must be valid; `out` must be writable.
 */
enum TkwStatus tkw_learn(const struct TkwPath *path,
                         const struct TkwLearnerConfig *config,
                         struct TkwTrajectory **out);

/**
 * Number of stored thresholds, 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t tkw_trajectory_len(const struct TkwTrajectory *traj);

/**
 * Time index of the first stored threshold.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t tkw_trajectory_start_t(const struct TkwTrajectory *traj);

/**
 * Copies `θ¹` (`component = 1`) or `θ²` (`component = 2`).
 *
 * # Safety
 * `traj` must be a live handle and `buf` valid for `len` writes.
 */
enum TkwStatus tkw_trajectory_copy(const struct TkwTrajectory *traj,
                                   uint32_t component,
                                   double *buf,
                                   size_t len);

/**
 * # Safety
 * `traj` must be null or a handle not yet freed.
 */
void tkw_trajectory_free(struct TkwTrajectory *traj);

/**
 * Time-average growth of a fixed threshold strategy; `theta2` is used only
 * when `kind` is volatility.
 *
 * # Safety
 * `path` must be a live handle and `out` writable.
 */
enum TkwStatus tkw_realized_growth(const struct TkwPath *path,
                                   enum TkwKind kind,
                                   double theta1,
                                   double theta2,
                                   enum TkwDirection dir,
                                   double *out);

/**
 * Growth-optimal AR(1) threshold `-μ/α` and the side that buys.
 *
 * # Safety
 * `theta` and `dir` must be writable.
 */
enum TkwStatus tkw_optimal_theta_ar1(double mu,
                                     double alpha,
                                     double *theta,
                                     enum TkwDirection *dir);

/**
 * Checks the step-size conditions; bit `i - 1` of `failed_mask` is set when
 * condition `i` fails, so zero means all hold.
 *
 * # Safety
 * `failed_mask` must be writable.
 */
enum TkwStatus tkw_validate_schedule(double p, double q, uint32_t *failed_mask);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THRESHOLD_KW_H */
