#ifndef MFC_H
#define MFC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  MFC_STATUS_OK = 0,
  MFC_STATUS_NULL_POINTER = 1,
  MFC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A numerical routine failed (e.g. root finding did not converge).
   */
  MFC_STATUS_NUMERICAL = 3,
  MFC_STATUS_BUFFER_TOO_SMALL = 4,
  MFC_STATUS_OUT_OF_RANGE = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  MFC_STATUS_INTERNAL = 6,
} MfcStatus;

typedef enum {
  MFC_STABILITY_HURWITZ = 0,
  MFC_STABILITY_UNSTABLE = 1,
  MFC_STABILITY_MARGINAL = 2,
} MfcStability;

typedef enum {
  MFC_CONTROLLER_IP = 0,
  MFC_CONTROLLER_IPI = 1,
  MFC_CONTROLLER_IPD = 2,
  MFC_CONTROLLER_IPID = 3,
  MFC_CONTROLLER_CLASSIC_PID = 4,
} MfcController;

typedef enum {
  MFC_COLUMN_TIME = 0,
  MFC_COLUMN_CONTROL = 1,
  MFC_COLUMN_OUTPUT_TRUE = 2,
  MFC_COLUMN_OUTPUT_MEASURED = 3,
  MFC_COLUMN_REFERENCE = 4,
  MFC_COLUMN_ERROR = 5,
  MFC_COLUMN_F_HAT = 6,
  MFC_COLUMN_F_TRUE = 7,
} MfcColumn;

typedef enum {
  MFC_VERDICT_STABLE = 0,
  MFC_VERDICT_UNSTABLE = 1,
  MFC_VERDICT_MARGINAL = 2,
  MFC_VERDICT_EXCLUDED = 3,
} MfcVerdict;

/**
 * Opaque `F` estimator.
 */
typedef struct MfcEstimator MfcEstimator;

/**
 * Opaque stability grid.
 */
typedef struct MfcGrid MfcGrid;

/**
 * Opaque simulation trace.
 */
typedef struct MfcTrace MfcTrace;

/**
 * Closed-loop run on `ÿ + a1·ẏ + a0·y = b·delta·u` with a smooth 0 to 1
 * reference step over `[1, 6]` s. Intelligent controllers use the
 * delayed-input estimate of order 1 (iP, iPI) or 2 (iPD, iPID); the classic
 * PID runs an order-2 estimator as an observer.
 */
typedef struct {
  MfcController controller;
  double alpha;
  double kp;
  double ki;
  double kd;
  double t_filter;
  double a1;
  double a0;
  double b;
  double delta;
  double sigma;
  uint64_t seed;
  double h;
  double duration;
  double y0;
} MfcSimParams;

typedef struct {
  double rmse;
  double iae;
  double tail_max_abs_error;
  bool diverged;
} MfcMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *mfc_last_error_message(void);

/**
 * Routh-Hurwitz test on the polynomial with ascending coefficients `coeffs[0..len]`.
 *
 * # Safety
 * `coeffs` must point to `len` readable doubles and `kind_out` must be
 * valid; `rhp_count_out` may be null.
 */
MfcStatus mfc_routh_hurwitz(const double *coeffs,
                            size_t len,
                            MfcStability *kind_out,
                            size_t *rhp_count_out);

/**
 * Largest real part among the roots of `coeffs[0..len]` (ascending).
 *
 * # Safety
 * `coeffs` must point to `len` readable doubles; `out` must be valid.
 */
MfcStatus mfc_max_real_part(const double *coeffs, size_t len, double *out);

/**
 * Ascending coefficients of the filtered iP closed-loop quartic, written to `out[0..5]`.
 *
 * # Safety
 * `out` must point to 5 writable doubles.
 */
MfcStatus mfc_ip_charpoly(double alpha, double kp, double t_filter, double *out);

/**
 * Coefficients of `(s + r)^multiplicity`, ascending, into `out[0..=multiplicity]`.
 *
 * # Safety
 * `out` must point to `capacity` writable doubles.
 */
MfcStatus mfc_expand_pole(double r, uint32_t multiplicity, double *out, size_t capacity);

/**
 * iPD gains placing the error dynamics at `(s + pole)²`.
 *
 * # Safety
 * The output pointers must be valid.
 */
MfcStatus mfc_ipd_gains(double pole, double *kp_out, double *kd_out);

/**
 * PID gains placing the loop around `ÿ + a1·ẏ + a0·y = b·u` at `(s + pole)³`.
 *
 * # Safety
 * The output pointers must be valid.
 */
MfcStatus mfc_pid_gains(double a1,
                        double a0,
                        double b,
                        double pole,
                        double *kp_out,
                        double *ki_out,
                        double *kd_out);

/**
 * Creates a delayed-input estimator of order `nu` (1 or 2).
 *
 * # Safety
 * `out` must be valid; the returned handle must be released with [`mfc_estimator_free`].
 */
MfcStatus mfc_estimator_new(uint32_t nu,
                            double alpha,
                            double t_filter,
                            double h,
                            MfcEstimator **out);

/**
 * Feeds one measurement and the previous control; writes `F̂` to `f_hat_out`.
 *
 * # Safety
 * `est` must be a live handle and `f_hat_out` valid.
 */
MfcStatus mfc_estimator_step(MfcEstimator *est,
                             double y_measured,
                             double u_prev,
                             double *f_hat_out);

/**
 * # Safety
 * `est` must be null or a handle from [`mfc_estimator_new`] not yet freed.
 */
void mfc_estimator_free(MfcEstimator *est);

/**
 * Nominal iPD setup: α = 0.5, gains from `(s + 0.5)²`, T = 0.1, plant
 * `ÿ - ẏ = u`, σ = 0.01, seed 1, h = 1 ms, 20 s, y(0) = -0.05.
 *
 * # Safety
 * `out` must be valid.
 */
MfcStatus mfc_sim_params_default(MfcSimParams *out);

/**
 * Runs one closed loop. Divergence is reported through [`mfc_trace_metrics`], not as an error.
 *
 * # Safety
 * `params` and `out` must be valid; release the trace with [`mfc_trace_free`].
 */
MfcStatus mfc_simulate(const MfcSimParams *params, MfcTrace **out);

/**
 * # Safety
 * `trace` must be a live handle and `len_out` valid.
 */
MfcStatus mfc_trace_len(const MfcTrace *trace, size_t *len_out);

/**
 * Copies one column into `buf`, which must hold at least `mfc_trace_len` values.
 *
 * # Safety
 * `trace` must be a live handle and `buf` must point to `capacity` writable doubles.
 */
MfcStatus mfc_trace_column(const MfcTrace *trace, MfcColumn column, double *buf, size_t capacity);

/**
 * # Safety
 * `trace` must be a live handle and `out` valid.
 */
MfcStatus mfc_trace_metrics(const MfcTrace *trace, MfcMetrics *out);

/**
 * # Safety
 * `trace` must be null or a handle from [`mfc_simulate`] not yet freed.
 */
void mfc_trace_free(MfcTrace *trace);

/**
 * Sweeps the iP stability map. With `for_all_t` false the grid is
 * classified at `t_values[0]`; otherwise a cell is stable only if it is
 * stable for every `T` in `t_values` (strictly increasing).
 *
 * # Safety
 * `t_values` must point to `t_len` readable doubles and `out` must be valid;
 * release the grid with [`mfc_grid_free`].
 */
MfcStatus mfc_stabmap_sweep(double kp_min,
                            double kp_max,
                            size_t kp_count,
                            double alpha_min,
                            double alpha_max,
                            size_t alpha_count,
                            const double *t_values,
                            size_t t_len,
                            bool for_all_t,
                            MfcGrid **out);

/**
 * # Safety
 * `grid` must be a live handle and `out` valid.
 */
MfcStatus mfc_grid_stable_fraction(const MfcGrid *grid, double *out);

/**
 * Verdict of the cell at `kp_index`, `alpha_index`.
 *
 * # Safety
 * `grid` must be a live handle and `out` valid.
 */
MfcStatus mfc_grid_verdict(const MfcGrid *grid,
                           size_t kp_index,
                           size_t alpha_index,
                           MfcVerdict *out);

/**
 * # Safety
 * `grid` must be null or a handle from [`mfc_stabmap_sweep`] not yet freed.
 */
void mfc_grid_free(MfcGrid *grid);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MFC_H */
