/* C interface to the liquidator solvers. */

#ifndef LIQUIDATOR_H
#define LIQUIDATOR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every FFI call.
 */
typedef enum LiqStatus {
  LiqOk = 0,
  LiqErrInvalidArgument = 1,
  LiqErrNumerical = 2,
  LiqErrNullPointer = 3,
  LiqErrPanic = 4,
} LiqStatus;

/**
 * Opaque constant-volatility solver handle.
 */
typedef struct LiqConstantVolSolver LiqConstantVolSolver;

/**
 * Ensemble summary of a constant-volatility Monte Carlo run.
 */
typedef struct LiqEnsembleStats {
  double mean_gl;
  double std_gl;
  double mean_objective;
  double mean_final_inventory;
} LiqEnsembleStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *liq_last_error_message(void);

/**
 * Builds a constant-volatility solver over `n_venues` venues given as
 * parallel `betas` / `eta_tems` arrays.
 *
 * # Safety
 * `betas` and `eta_tems` must point to `n_venues` doubles and `out` must be
 * a valid pointer; the handle must be freed with
 * [`liq_constant_vol_free`].
 */
enum LiqStatus liq_constant_vol_new(const double *betas,
                                    const double *eta_tems,
                                    uintptr_t n_venues,
                                    double eta_per,
                                    double quantity,
                                    double horizon,
                                    double risk_aversion,
                                    double terminal_penalty,
                                    double sigma,
                                    struct LiqConstantVolSolver **out);

/**
 * Releases a solver handle. Null is ignored.
 *
 * # Safety
 * `handle` must have come from [`liq_constant_vol_new`] and not be freed twice.
 */
void liq_constant_vol_free(struct LiqConstantVolSolver *handle);

/**
 * Value-function coefficient `h(t)`.
 *
 * # Safety
 * `handle` and `out` must be valid pointers.
 */
enum LiqStatus liq_constant_vol_h(const struct LiqConstantVolSolver *handle, double t, double *out);

/**
 * `J(t, q) = h(t) q^2`.
 *
 * # Safety
 * `handle` and `out` must be valid pointers.
 */
enum LiqStatus liq_constant_vol_value(const struct LiqConstantVolSolver *handle,
                                      double t,
                                      double q,
                                      double *out);

/**
 * Optimal per-venue rates at `(t, q)`; `out_rates` receives one rate per
 * venue.
 *
 * # Safety
 * `out_rates` must point to as many doubles as the solver has venues.
 */
enum LiqStatus liq_constant_vol_rates(const struct LiqConstantVolSolver *handle,
                                      double t,
                                      double q,
                                      double *out_rates);

/**
 * Runs `n_paths` simulated paths (binomial shocks) and fills `out`.
 *
 * # Safety
 * `handle` and `out` must be valid pointers.
 */
enum LiqStatus liq_constant_vol_simulate(const struct LiqConstantVolSolver *handle,
                                         double initial_price,
                                         double dt,
                                         uint64_t n_paths,
                                         uint64_t seed,
                                         struct LiqEnsembleStats *out);

/**
 * Terminal inventory of the market-order-only closed form.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LiqStatus liq_mo_only_terminal_inventory(double eta_tem,
                                              double eta_per,
                                              double terminal_penalty,
                                              double horizon,
                                              double quantity,
                                              double *out);

/**
 * Combined market-and-limit rate `theta(t, q)` for the given order-book
 * parameters (raw feedback value, not clamped).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LiqStatus liq_lob_theta_ml(double lambda_m,
                                double spread,
                                double eta_up,
                                double eta_down,
                                double eta_jump,
                                double eta_tem,
                                double eta_per,
                                double terminal_penalty,
                                double horizon,
                                double t,
                                double q,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIQUIDATOR_H */
