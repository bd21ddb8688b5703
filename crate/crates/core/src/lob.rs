//! Risk-neutral liquidation in a limit order book (single venue).
//!
//! Counterparty buy market orders arrive at Poisson rate
//! `lambda_m = A exp(-kappa * spread)` and lift one share of the trader's
//! resting ask. Fills move the bid up by `eta_up`; in their absence an
//! adverse down-jump of `eta_down` occurs with compensating probability
//! `lambda_m (eta_up / eta_down) dt`, so the bid is driftless. The value
//! function is quadratic with coefficients `(h, g, f)`: `h` is the
//! market-order-only coefficient, `g` prices the information carried by
//! fills, `f` collects the spread and adverse-selection income.

use crate::error::SolverError;
use crate::numerics::simpson_converged;

/// Order-book environment parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LobParams {
    /// Buy market-order arrival intensity.
    pub lambda_m: f64,
    /// Quoted ask-bid spread; limit sells rest at `bid + spread`.
    pub spread: f64,
    /// Expected bid up-move right after a fill.
    pub eta_up: f64,
    /// Adverse bid down-move when no fill arrives.
    pub eta_down: f64,
    /// Jump size applied by the simulator on both events.
    pub eta_jump: f64,
}

impl LobParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.lambda_m >= 0.0) || !self.lambda_m.is_finite() {
            return Err(SolverError::Invalid(format!(
                "lambda_m = {}",
                self.lambda_m
            )));
        }
        if !(self.spread >= 0.0) {
            return Err(SolverError::Invalid(format!("spread = {}", self.spread)));
        }
        if self.eta_up > 0.0 && !(self.eta_down > 0.0) {
            return Err(SolverError::Invalid(
                "eta_down must be positive when eta_up is".into(),
            ));
        }
        if self.eta_up < 0.0 || self.eta_down < 0.0 || self.eta_jump < 0.0 {
            return Err(SolverError::Invalid(
                "jump sizes must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Builds the arrival intensity from a depth model `A exp(-kappa spread)`.
    pub fn from_arrival(
        a: f64,
        kappa: f64,
        spread: f64,
        eta_up: f64,
        eta_down: f64,
        eta_jump: f64,
    ) -> Self {
        Self {
            lambda_m: arrival_rate(a, kappa, spread),
            spread,
            eta_up,
            eta_down,
            eta_jump,
        }
    }
}

/// `lambda_m = A exp(-kappa * spread)`.
pub fn arrival_rate(a: f64, kappa: f64, spread: f64) -> f64 {
    a * (-kappa * spread).exp()
}

/// Probability of an adverse down-jump over `dt`, conditional on whether a
/// buy market order arrived.
pub fn adverse_jump_prob(
    lambda_m: f64,
    eta_up: f64,
    eta_down: f64,
    dt: f64,
    mo_arrived: bool,
) -> Result<f64, SolverError> {
    if mo_arrived || eta_up == 0.0 {
        return Ok(0.0);
    }
    if !(eta_down > 0.0) {
        return Err(SolverError::Invalid("eta_down must be positive".into()));
    }
    let p = lambda_m * eta_up / eta_down * dt;
    if p > 1.0 {
        return Err(SolverError::ProbabilityOverflow { p });
    }
    Ok(p)
}

/// Consistent fill-rate estimator: executions at the touch divided by the
/// observation horizon.
pub fn estimate_lambda_from_fills(fill_count: u64, horizon: f64) -> f64 {
    assert!(horizon > 0.0, "horizon must be positive");
    fill_count as f64 / horizon
}

/// Market-order-only closed form for a risk-neutral trader.
#[derive(Debug, Clone, Copy)]
pub struct MoOnlySolution {
    pub eta_tem: f64,
    pub eta_per: f64,
    pub terminal_penalty: f64,
    pub horizon: f64,
    pub quantity: f64,
}

impl MoOnlySolution {
    pub fn new(
        eta_tem: f64,
        eta_per: f64,
        terminal_penalty: f64,
        horizon: f64,
        quantity: f64,
    ) -> Result<Self, SolverError> {
        if !(2.0 * terminal_penalty > eta_per) {
            return Err(SolverError::InfeasiblePenalty);
        }
        if !(eta_tem > 0.0) || !(eta_per >= 0.0) || !(horizon > 0.0) || !(quantity > 0.0) {
            return Err(SolverError::Invalid(
                "eta_tem, horizon and quantity must be positive; eta_per nonnegative".into(),
            ));
        }
        Ok(Self {
            eta_tem,
            eta_per,
            terminal_penalty,
            horizon,
            quantity,
        })
    }

    /// Value-function coefficient
    /// `h(t) = 1 / (2/(eta_per - 2K) - (T - t)/eta_tem) - eta_per/2`.
    pub fn h(&self, t: f64) -> f64 {
        1.0 / (2.0 / (self.eta_per - 2.0 * self.terminal_penalty)
            - (self.horizon - t) / self.eta_tem)
            - 0.5 * self.eta_per
    }

    /// `J(t, q) = h(t) q^2`.
    pub fn value(&self, t: f64, q: f64) -> f64 {
        self.h(t) * q * q
    }

    /// Liquidation rate along the published linear trajectory:
    /// `theta(t, q) = q / (eta_tem/(2K - eta_per) + (T - t))`.
    pub fn rate(&self, t: f64, q: f64) -> f64 {
        q / (self.eta_tem / (2.0 * self.terminal_penalty - self.eta_per) + (self.horizon - t))
    }

    /// Deterministic inventory along that trajectory (linear in `t`).
    pub fn inventory(&self, t: f64) -> f64 {
        let c = self.eta_tem / (2.0 * self.terminal_penalty - self.eta_per);
        self.quantity * (c + self.horizon - t) / (c + self.horizon)
    }

    /// Outstanding position carried into the terminal trade:
    /// `X_T = eta_tem Q / (eta_tem + T (2K - eta_per))`.
    pub fn terminal_inventory(&self) -> f64 {
        self.eta_tem * self.quantity
            / (self.eta_tem + self.horizon * (2.0 * self.terminal_penalty - self.eta_per))
    }
}

/// Quadratic-value coefficients for the combined market + limit strategy.
#[derive(Debug, Clone)]
pub struct LobCoefficients {
    pub lob: LobParams,
    pub eta_tem: f64,
    pub eta_per: f64,
    pub terminal_penalty: f64,
    pub horizon: f64,
    /// Grid used to cross-check the quadrature against the closed form.
    pub grid: Vec<f64>,
    pub g_grid: Vec<f64>,
    pub f_grid: Vec<f64>,
}

/// Base subinterval count for the coefficient quadratures.
const QUAD_BASE: usize = 1000;
const MAX_SUBINTERVALS: usize = 1 << 18;

impl LobCoefficients {
    /// Builds the coefficients, evaluating `g` and `f` by composite Simpson
    /// (doubled until 1e-8 relative stability) on `grid_points + 1` nodes.
    pub fn new(
        lob: LobParams,
        eta_tem: f64,
        eta_per: f64,
        terminal_penalty: f64,
        horizon: f64,
        grid_points: usize,
    ) -> Result<Self, SolverError> {
        lob.validate()?;
        if !(2.0 * terminal_penalty > eta_per) {
            return Err(SolverError::InfeasiblePenalty);
        }
        let mut out = Self {
            lob,
            eta_tem,
            eta_per,
            terminal_penalty,
            horizon,
            grid: Vec::new(),
            g_grid: Vec::new(),
            f_grid: Vec::new(),
        };
        let n = grid_points.max(2);
        for k in 0..=n {
            let t = if k == n {
                horizon
            } else {
                k as f64 * horizon / n as f64
            };
            out.grid.push(t);
            out.g_grid.push(out.g_quadrature(t)?);
            out.f_grid.push(out.f_quadrature(t)?);
        }
        Ok(out)
    }

    /// `u(t) = 1/(2K - eta_per) + (T - t)/(2 eta_tem)`; `2h + eta_per = -1/u`.
    fn u(&self, t: f64) -> f64 {
        1.0 / (2.0 * self.terminal_penalty - self.eta_per)
            + (self.horizon - t) / (2.0 * self.eta_tem)
    }

    /// Discount ratio `exp((1/2 eta) int_t^r (2h + eta_per))  = u(r)/u(t)`.
    pub fn growth_ratio(&self, t: f64, r: f64) -> f64 {
        self.u(r) / self.u(t)
    }

    /// Same `h` as the market-order-only problem (risk-neutral identity).
    pub fn h(&self, t: f64) -> f64 {
        1.0 / (2.0 / (self.eta_per - 2.0 * self.terminal_penalty)
            - (self.horizon - t) / self.eta_tem)
            - 0.5 * self.eta_per
    }

    /// Fill-information coefficient in closed form:
    /// `g(t) = (lambda_m / u(t)) [ (T-t) + eta_per ((T-t)/(2K-eta_per) + (T-t)^2/(4 eta_tem)) ]`.
    pub fn g(&self, t: f64) -> f64 {
        let ttg = self.horizon - t;
        let int_u =
            ttg / (2.0 * self.terminal_penalty - self.eta_per) + ttg * ttg / (4.0 * self.eta_tem);
        self.lob.lambda_m / self.u(t) * (ttg + self.eta_per * int_u)
    }

    /// `g` by its defining quadrature `-2 lambda_m int_t^T ratio(t, r) h(r) dr`.
    pub fn g_quadrature(&self, t: f64) -> Result<f64, SolverError> {
        if self.lob.lambda_m == 0.0 {
            return Ok(0.0);
        }
        let f = |r: f64| -2.0 * self.lob.lambda_m * self.growth_ratio(t, r) * self.h(r);
        simpson_converged(&f, t, self.horizon, QUAD_BASE, 1e-8, MAX_SUBINTERVALS)
    }

    /// `f(t) = int_t^T [ lambda_m (eta_up + spread + h - g) + g^2/(4 eta) ] dr`.
    pub fn f_quadrature(&self, t: f64) -> Result<f64, SolverError> {
        let f = |r: f64| {
            self.lob.lambda_m * (self.lob.eta_up + self.lob.spread + self.h(r) - self.g(r))
                + self.g(r) * self.g(r) / (4.0 * self.eta_tem)
        };
        simpson_converged(&f, t, self.horizon, QUAD_BASE, 1e-8, MAX_SUBINTERVALS)
    }

    pub fn f(&self, t: f64) -> Result<f64, SolverError> {
        self.f_quadrature(t)
    }

    /// `J(t, q) = f(t) + g(t) q + h(t) q^2`.
    pub fn value(&self, t: f64, q: f64) -> Result<f64, SolverError> {
        Ok(self.f(t)? + self.g(t) * q + self.h(t) * q * q)
    }

    /// Horizon below which `g <= 2 eta_tem lambda_m` holds everywhere:
    /// `(2 eta / (2K - eta_per)) [ sqrt(1 + 2 (2K - eta_per)/eta_per) - 1 ]`.
    pub fn horizon_bound(&self) -> f64 {
        let d = 2.0 * self.terminal_penalty - self.eta_per;
        2.0 * self.eta_tem / d * ((1.0 + 2.0 * d / self.eta_per).sqrt() - 1.0)
    }
}

/// Combined-strategy market-order rate
/// `theta = -(1/2 eta) [ g(t) + (2h(t) + eta_per) q ]`; may be negative for
/// small `q` (the simulator clamps it at zero).
pub fn theta_ml(t: f64, q: f64, coeffs: &LobCoefficients) -> f64 {
    -(coeffs.g(t) + (2.0 * coeffs.h(t) + coeffs.eta_per) * q) / (2.0 * coeffs.eta_tem)
}

/// Expected inventory under the combined strategy:
/// `E[X_t] = u(t) (Q/u(0) - int_0^t (lambda_m - g/(2 eta)) / u dv)`.
pub fn expected_inventory(
    t: f64,
    quantity: f64,
    coeffs: &LobCoefficients,
) -> Result<f64, SolverError> {
    let k = if t == 0.0 {
        0.0
    } else {
        let w = |v: f64| (coeffs.lob.lambda_m - coeffs.g(v) / (2.0 * coeffs.eta_tem)) / coeffs.u(v);
        simpson_converged(&w, 0.0, t, QUAD_BASE, 1e-10, MAX_SUBINTERVALS)?
    };
    Ok(coeffs.u(t) * (quantity / coeffs.u(0.0) - k))
}

/// Smallest mandate for which the expected combined-strategy rate stays
/// nonnegative on the whole horizon: the sweep maximum of
/// `u(0) (int_0^t (lambda_m - g/(2 eta))/u dv + g(t))`.
pub fn min_feasible_target(coeffs: &LobCoefficients, sweep_points: usize) -> f64 {
    let n = sweep_points.max(2);
    let dt = coeffs.horizon / n as f64;
    let mut k_acc = 0.0;
    let w = |v: f64| (coeffs.lob.lambda_m - coeffs.g(v) / (2.0 * coeffs.eta_tem)) / coeffs.u(v);
    let mut prev_w = w(0.0);
    let u0 = coeffs.u(0.0);
    let mut bound = u0 * coeffs.g(0.0);
    for k in 1..=n {
        let t = if k == n {
            coeffs.horizon
        } else {
            k as f64 * dt
        };
        let wk = w(t);
        k_acc += 0.5 * (prev_w + wk) * dt;
        prev_w = wk;
        if t < coeffs.horizon {
            bound = bound.max(u0 * (k_acc + coeffs.g(t)));
        }
    }
    bound.max(0.0)
}
