//! C ABI over the liquidation solvers.
//!
//! Conventions: every function returns a status code (`LIQ_OK` on success),
//! results come back through out-pointers, and solver state lives behind
//! opaque handles that must be released with the matching `_free` call.
//! The most recent error message per thread is available through
//! `liq_last_error_message` until the next failing call replaces it.
//!
//! The generated header is committed at `include/liquidator.h`; regenerate
//! it with `cbindgen --crate liquidator-ffi --output include/liquidator.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use liquidator::constvol::ConstantVolSolution;
use liquidator::lob::{LobCoefficients, LobParams, MoOnlySolution};
use liquidator::market::VenueSet;
use liquidator::rng::PathStreams;
use liquidator::sim::{ConstantVolSim, EnsembleStats, ShockKind};

/// Status codes returned by every FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiqStatus {
    LiqOk = 0,
    LiqErrInvalidArgument = 1,
    LiqErrNumerical = 2,
    LiqErrNullPointer = 3,
    LiqErrPanic = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn liq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|c| c.as_ptr())
            .unwrap_or(std::ptr::null())
    })
}

fn guard<F: FnOnce() -> LiqStatus>(f: F) -> LiqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("panic across the FFI boundary".into());
            LiqStatus::LiqErrPanic
        }
    }
}

/// Opaque constant-volatility solver handle.
pub struct LiqConstantVolSolver {
    solution: ConstantVolSolution,
}

/// Builds a constant-volatility solver over `n_venues` venues given as
/// parallel `betas` / `eta_tems` arrays.
///
/// # Safety
/// `betas` and `eta_tems` must point to `n_venues` doubles and `out` must be
/// a valid pointer; the handle must be freed with
/// [`liq_constant_vol_free`].
#[no_mangle]
pub unsafe extern "C" fn liq_constant_vol_new(
    betas: *const f64,
    eta_tems: *const f64,
    n_venues: usize,
    eta_per: f64,
    quantity: f64,
    horizon: f64,
    risk_aversion: f64,
    terminal_penalty: f64,
    sigma: f64,
    out: *mut *mut LiqConstantVolSolver,
) -> LiqStatus {
    guard(|| {
        if betas.is_null() || eta_tems.is_null() || out.is_null() || n_venues == 0 {
            set_error("null input pointer or empty venue list".into());
            return LiqStatus::LiqErrNullPointer;
        }
        let betas = slice::from_raw_parts(betas, n_venues);
        let eta_tems = slice::from_raw_parts(eta_tems, n_venues);
        let raw: Vec<(f64, f64)> = betas
            .iter()
            .copied()
            .zip(eta_tems.iter().copied())
            .collect();
        let venues = match VenueSet::new(&raw, eta_per) {
            Ok(v) => v,
            Err(e) => {
                set_error(e.to_string());
                return LiqStatus::LiqErrInvalidArgument;
            }
        };
        match ConstantVolSolution::new(
            venues,
            quantity,
            horizon,
            risk_aversion,
            terminal_penalty,
            sigma,
        ) {
            Ok(solution) => {
                *out = Box::into_raw(Box::new(LiqConstantVolSolver { solution }));
                LiqStatus::LiqOk
            }
            Err(e) => {
                set_error(e.to_string());
                LiqStatus::LiqErrNumerical
            }
        }
    })
}

/// Releases a solver handle. Null is ignored.
///
/// # Safety
/// `handle` must have come from [`liq_constant_vol_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn liq_constant_vol_free(handle: *mut LiqConstantVolSolver) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Value-function coefficient `h(t)`.
///
/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn liq_constant_vol_h(
    handle: *const LiqConstantVolSolver,
    t: f64,
    out: *mut f64,
) -> LiqStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            set_error("null pointer".into());
            return LiqStatus::LiqErrNullPointer;
        }
        *out = (*handle).solution.h(t);
        LiqStatus::LiqOk
    })
}

/// `J(t, q) = h(t) q^2`.
///
/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn liq_constant_vol_value(
    handle: *const LiqConstantVolSolver,
    t: f64,
    q: f64,
    out: *mut f64,
) -> LiqStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            set_error("null pointer".into());
            return LiqStatus::LiqErrNullPointer;
        }
        *out = (*handle).solution.value(t, q);
        LiqStatus::LiqOk
    })
}

/// Optimal per-venue rates at `(t, q)`; `out_rates` receives one rate per
/// venue.
///
/// # Safety
/// `out_rates` must point to as many doubles as the solver has venues.
#[no_mangle]
pub unsafe extern "C" fn liq_constant_vol_rates(
    handle: *const LiqConstantVolSolver,
    t: f64,
    q: f64,
    out_rates: *mut f64,
) -> LiqStatus {
    guard(|| {
        if handle.is_null() || out_rates.is_null() {
            set_error("null pointer".into());
            return LiqStatus::LiqErrNullPointer;
        }
        let rates = (*handle).solution.rates(t, q);
        let out = slice::from_raw_parts_mut(out_rates, rates.len());
        out.copy_from_slice(&rates);
        LiqStatus::LiqOk
    })
}

/// Ensemble summary of a constant-volatility Monte Carlo run.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LiqEnsembleStats {
    pub mean_gl: f64,
    pub std_gl: f64,
    pub mean_objective: f64,
    pub mean_final_inventory: f64,
}

/// Runs `n_paths` simulated paths (binomial shocks) and fills `out`.
///
/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn liq_constant_vol_simulate(
    handle: *const LiqConstantVolSolver,
    initial_price: f64,
    dt: f64,
    n_paths: u64,
    seed: u64,
    out: *mut LiqEnsembleStats,
) -> LiqStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            set_error("null pointer".into());
            return LiqStatus::LiqErrNullPointer;
        }
        let sim = ConstantVolSim {
            solution: &(*handle).solution,
            initial_price,
            dt,
            shocks: ShockKind::Binomial,
        };
        if let Err(e) = sim.steps() {
            set_error(e.to_string());
            return LiqStatus::LiqErrInvalidArgument;
        }
        let mut paths = Vec::with_capacity(n_paths as usize);
        for i in 0..n_paths {
            let mut streams = PathStreams::new(seed, i);
            paths.push(sim.run_path(&mut streams, false));
        }
        let stats = EnsembleStats::from_paths(&paths);
        *out = LiqEnsembleStats {
            mean_gl: stats.mean,
            std_gl: stats.std,
            mean_objective: stats.mean_objective,
            mean_final_inventory: stats.mean_final_inventory,
        };
        LiqStatus::LiqOk
    })
}

/// Terminal inventory of the market-order-only closed form.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn liq_mo_only_terminal_inventory(
    eta_tem: f64,
    eta_per: f64,
    terminal_penalty: f64,
    horizon: f64,
    quantity: f64,
    out: *mut f64,
) -> LiqStatus {
    guard(|| {
        if out.is_null() {
            set_error("null pointer".into());
            return LiqStatus::LiqErrNullPointer;
        }
        match MoOnlySolution::new(eta_tem, eta_per, terminal_penalty, horizon, quantity) {
            Ok(mo) => {
                *out = mo.terminal_inventory();
                LiqStatus::LiqOk
            }
            Err(e) => {
                set_error(e.to_string());
                LiqStatus::LiqErrNumerical
            }
        }
    })
}

/// Combined market-and-limit rate `theta(t, q)` for the given order-book
/// parameters (raw feedback value, not clamped).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn liq_lob_theta_ml(
    lambda_m: f64,
    spread: f64,
    eta_up: f64,
    eta_down: f64,
    eta_jump: f64,
    eta_tem: f64,
    eta_per: f64,
    terminal_penalty: f64,
    horizon: f64,
    t: f64,
    q: f64,
    out: *mut f64,
) -> LiqStatus {
    guard(|| {
        if out.is_null() {
            set_error("null pointer".into());
            return LiqStatus::LiqErrNullPointer;
        }
        let lob = LobParams {
            lambda_m,
            spread,
            eta_up,
            eta_down,
            eta_jump,
        };
        match LobCoefficients::new(lob, eta_tem, eta_per, terminal_penalty, horizon, 8) {
            Ok(coeffs) => {
                *out = liquidator::lob::theta_ml(t, q, &coeffs);
                LiqStatus::LiqOk
            }
            Err(e) => {
                set_error(e.to_string());
                LiqStatus::LiqErrNumerical
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    #[test]
    fn solver_lifecycle_through_the_c_abi() {
        unsafe {
            let betas = [1.0f64];
            let etas = [0.01f64];
            let mut handle: *mut LiqConstantVolSolver = std::ptr::null_mut();
            let status = liq_constant_vol_new(
                betas.as_ptr(),
                etas.as_ptr(),
                1,
                0.005,
                100.0,
                1.0,
                0.1,
                0.1,
                std::f64::consts::E,
                &mut handle,
            );
            assert_eq!(status, LiqStatus::LiqOk);
            let mut h = 0.0;
            assert_eq!(liq_constant_vol_h(handle, 1.0, &mut h), LiqStatus::LiqOk);
            assert!((h + 0.1).abs() < 1e-14);
            let mut value = 0.0;
            assert_eq!(
                liq_constant_vol_value(handle, 0.0, 100.0, &mut value),
                LiqStatus::LiqOk
            );
            assert!((value + 884.6).abs() < 0.1);
            let mut rate = [0.0f64];
            assert_eq!(
                liq_constant_vol_rates(handle, 0.0, 100.0, rate.as_mut_ptr()),
                LiqStatus::LiqOk
            );
            assert!((rate[0] - 859.6).abs() < 0.1);
            let mut stats = LiqEnsembleStats {
                mean_gl: 0.0,
                std_gl: 0.0,
                mean_objective: 0.0,
                mean_final_inventory: 0.0,
            };
            assert_eq!(
                liq_constant_vol_simulate(handle, 15.0, 1e-3, 32, 9, &mut stats),
                LiqStatus::LiqOk
            );
            assert!(stats.mean_gl < 0.0);
            liq_constant_vol_free(handle);
        }
    }

    #[test]
    fn invalid_venues_report_an_error_message() {
        unsafe {
            let betas = [0.6f64, 0.6];
            let etas = [0.01f64, 0.01];
            let mut handle: *mut LiqConstantVolSolver = std::ptr::null_mut();
            let status = liq_constant_vol_new(
                betas.as_ptr(),
                etas.as_ptr(),
                2,
                0.005,
                100.0,
                1.0,
                0.1,
                0.1,
                1.0,
                &mut handle,
            );
            assert_eq!(status, LiqStatus::LiqErrInvalidArgument);
            let msg = liq_last_error_message();
            assert!(!msg.is_null());
            let text = CStr::from_ptr(msg).to_str().unwrap();
            assert!(text.contains("simplex"));
        }
    }

    #[test]
    fn closed_forms_through_the_c_abi() {
        unsafe {
            let mut x_t = 0.0;
            assert_eq!(
                liq_mo_only_terminal_inventory(0.01, 0.005, 0.1, 1.0, 100.0, &mut x_t),
                LiqStatus::LiqOk
            );
            assert!((x_t - 4.878048780487805).abs() < 1e-10);

            let mut theta = 0.0;
            assert_eq!(
                liq_lob_theta_ml(
                    100.0, 0.3, 0.02, 0.02, 0.02, 0.01, 0.005, 0.1, 1.0, 0.0, 200.0, &mut theta
                ),
                LiqStatus::LiqOk
            );
            assert!(theta > 0.0);

            assert_eq!(
                liq_mo_only_terminal_inventory(0.01, 0.5, 0.1, 1.0, 100.0, &mut x_t),
                LiqStatus::LiqErrNumerical
            );
        }
    }
}
