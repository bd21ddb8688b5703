//! Closed-form mean-quadratic liquidation with constant volatility.
//!
//! The quadratic value-function coefficient `h` solves the scalar Riccati
//! equation `dh/dt = Delta - a (h + b/2a)^2` with `h(T) = -K`, where
//! `Delta = lambda sigma^2 + (b^2 - 4ac) / 4a` and `(a, b, c)` aggregate the
//! venue impacts. `Delta >= 0` yields a hyperbolic solution, `Delta < 0` a
//! tangent solution with a finite escape time that must stay outside the
//! horizon. Feedback rates are linear in inventory, so the inventory decays
//! as an exponential of an integral of `h`.

use crate::error::SolverError;
use crate::market::{ImpactAggregates, VenueSet};

/// Solution family of the Riccati coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `Delta >= 0`; the boundary `Delta = 0` is folded in and evaluated
    /// through a separable closed form to avoid 0/0.
    Hyperbolic,
    /// `Delta < 0`; valid only while the tangent argument stays in
    /// `(-pi/2, pi/2)`.
    Trigonometric,
}

/// `Delta = lambda sigma^2 + (b^2 - 4ac) / 4a`. Always `<= lambda sigma^2`.
pub fn delta_n(agg: &ImpactAggregates, risk_aversion: f64, sigma: f64) -> f64 {
    risk_aversion * sigma * sigma + agg.discriminant() / (4.0 * agg.a)
}

/// Right-hand side of the admissibility condition on the penalty slope:
/// `K > b/2a + sqrt(|Delta|/a)`.
pub fn condition_14_threshold(agg: &ImpactAggregates, delta: f64) -> f64 {
    agg.b / (2.0 * agg.a) + (delta.abs() / agg.a).sqrt()
}

/// Strict check of the penalty-dominance condition.
pub fn check_condition_14(terminal_penalty: f64, agg: &ImpactAggregates, delta: f64) -> bool {
    terminal_penalty > condition_14_threshold(agg, delta)
}

/// Scalar Riccati problem `dv/dtau = -Delta + a v^2` (tau = time to go),
/// anchored at `v(0) = -(K - b/2a)`, evaluated in closed form.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RiccatiClosedForm {
    pub a: f64,
    pub b_over_2a: f64,
    pub delta: f64,
    pub terminal_penalty: f64,
}

/// Below this value of `sqrt(a |Delta|) * tau` the hyperbolic/trigonometric
/// forms degenerate and the separable `Delta = 0` solution is exact to
/// machine precision.
const DEGENERATE_ARG: f64 = 1e-7;

impl RiccatiClosedForm {
    fn v_terminal(&self) -> f64 {
        -(self.terminal_penalty - self.b_over_2a)
    }

    fn branch(&self) -> Branch {
        if self.delta >= 0.0 {
            Branch::Hyperbolic
        } else {
            Branch::Trigonometric
        }
    }

    fn is_degenerate(&self, horizon: f64) -> bool {
        (self.a * self.delta.abs()).sqrt() * horizon < DEGENERATE_ARG
    }

    /// `varsigma = (1 - x) / (1 + x)` with `x = (2Ka - b) / (2 sqrt(a Delta))`.
    fn varsigma(&self) -> f64 {
        let x = -self.v_terminal() * (self.a / self.delta).sqrt();
        (1.0 - x) / (1.0 + x)
    }

    /// Checks that the closed form is finite on the whole horizon and
    /// reports the branch. Returns the escape time inside `[0, T)` if not.
    fn validate(&self, horizon: f64) -> Result<Branch, SolverError> {
        let v_t = self.v_terminal();
        if self.is_degenerate(horizon) {
            // v(tau) = v_T / (1 - a v_T tau): escapes when the denominator
            // crosses zero, which needs v_T > 0.
            if v_t > 0.0 && 1.0 - self.a * v_t * horizon <= 0.0 {
                let tau_star = 1.0 / (self.a * v_t);
                return Err(SolverError::TanSingularity {
                    escape_time: horizon - tau_star,
                });
            }
            return Ok(Branch::Hyperbolic);
        }
        match self.branch() {
            Branch::Hyperbolic => {
                let varsigma = self.varsigma();
                if varsigma < 0.0 {
                    // Escape where varsigma * exp(-2 sqrt(a Delta) tau) = -1.
                    let sad = (self.a * self.delta).sqrt();
                    let tau_star = (-varsigma).ln() / (2.0 * sad);
                    if tau_star >= 0.0 && tau_star <= horizon {
                        return Err(SolverError::TanSingularity {
                            escape_time: horizon - tau_star,
                        });
                    }
                }
                Ok(Branch::Hyperbolic)
            }
            Branch::Trigonometric => {
                let s = (-self.a * self.delta).sqrt();
                let phase0 = (self.a * v_t / s).atan();
                if phase0 + s * horizon >= std::f64::consts::FRAC_PI_2 - 1e-12 {
                    let tau_star = (std::f64::consts::FRAC_PI_2 - phase0) / s;
                    return Err(SolverError::TanSingularity {
                        escape_time: horizon - tau_star,
                    });
                }
                Ok(Branch::Trigonometric)
            }
        }
    }

    /// `h(tau) = v(tau) + b/2a` at time-to-go `tau >= 0`.
    pub fn h_at_tau(&self, tau: f64, horizon: f64) -> f64 {
        let tau = tau.max(0.0);
        let v_t = self.v_terminal();
        let v = if self.is_degenerate(horizon) {
            v_t / (1.0 - self.a * v_t * tau)
        } else if self.delta >= 0.0 {
            let sad = (self.a * self.delta).sqrt();
            let varsigma = self.varsigma();
            let e = (-2.0 * sad * tau).exp();
            (self.delta / self.a).sqrt() * (varsigma * e - 1.0) / (varsigma * e + 1.0)
        } else {
            let s = (-self.a * self.delta).sqrt();
            let phase = (self.a * v_t / s).atan() + s * tau;
            (-self.delta / self.a).sqrt() * phase.tan()
        };
        v - self.b_over_2a
    }

    /// `a * int 2 v dtau` over `[tau_lo, tau_hi]`, evaluated analytically.
    /// This is the log of the inventory decay factor between two times.
    pub fn log_growth(&self, tau_lo: f64, tau_hi: f64, horizon: f64) -> f64 {
        debug_assert!(tau_lo <= tau_hi + 1e-15);
        let v_t = self.v_terminal();
        if self.is_degenerate(horizon) {
            return 2.0 * ((1.0 - self.a * v_t * tau_lo) / (1.0 - self.a * v_t * tau_hi)).ln();
        }
        if self.delta >= 0.0 {
            let sad = (self.a * self.delta).sqrt();
            let varsigma = self.varsigma();
            let e_hi = (-2.0 * sad * tau_hi).exp();
            let e_lo = (-2.0 * sad * tau_lo).exp();
            -2.0 * sad * (tau_hi - tau_lo)
                + 2.0 * ((1.0 + varsigma * e_lo) / (1.0 + varsigma * e_hi)).ln()
        } else {
            // 2 a v = d/dtau [2 ln cos(phase)] / ... integrate directly:
            // int 2 a v dtau = 2 ln( cos(phase(tau_lo)) / cos(phase(tau_hi)) )
            let s = (-self.a * self.delta).sqrt();
            let phase0 = (self.a * v_t / s).atan();
            let p_lo = phase0 + s * tau_lo;
            let p_hi = phase0 + s * tau_hi;
            2.0 * (p_lo.cos() / p_hi.cos()).ln()
        }
    }
}

/// Closed-form solution of the constant-volatility problem on a venue set.
#[derive(Debug, Clone)]
pub struct ConstantVolSolution {
    venues: VenueSet,
    agg: ImpactAggregates,
    quantity: f64,
    horizon: f64,
    risk_aversion: f64,
    terminal_penalty: f64,
    sigma: f64,
    delta: f64,
    branch: Branch,
    varsigma: Option<f64>,
    condition_14: bool,
    riccati: RiccatiClosedForm,
}

/// Analytic trading curve: inventory and per-venue rates on a uniform grid
/// over `[0, T)` (the last node sits at `T-`).
#[derive(Debug, Clone)]
pub struct TradingCurve {
    pub times: Vec<f64>,
    pub inventory: Vec<f64>,
    /// `rates[k][n]` is venue `n`'s rate at `times[k]`.
    pub rates: Vec<Vec<f64>>,
}

/// Default grid resolution for the trajectory quadrature.
pub const TRAJECTORY_GRID: usize = 2000;

impl ConstantVolSolution {
    pub fn new(
        venues: VenueSet,
        quantity: f64,
        horizon: f64,
        risk_aversion: f64,
        terminal_penalty: f64,
        sigma: f64,
    ) -> Result<Self, SolverError> {
        if !(quantity > 0.0) || !(horizon > 0.0) || !(terminal_penalty > 0.0) {
            return Err(SolverError::Invalid(format!(
                "quantity, horizon and terminal penalty must be positive (got {quantity}, {horizon}, {terminal_penalty})"
            )));
        }
        if !(risk_aversion >= 0.0) || !(sigma > 0.0) {
            return Err(SolverError::Invalid(format!(
                "risk_aversion must be >= 0 and sigma > 0 (got {risk_aversion}, {sigma})"
            )));
        }
        let agg = venues.aggregates();
        let delta = delta_n(&agg, risk_aversion, sigma);
        let riccati = RiccatiClosedForm {
            a: agg.a,
            b_over_2a: agg.b / (2.0 * agg.a),
            delta,
            terminal_penalty,
        };
        let branch = riccati.validate(horizon)?;
        let varsigma = match branch {
            Branch::Hyperbolic if !riccati.is_degenerate(horizon) => Some(riccati.varsigma()),
            _ => None,
        };
        let condition_14 = check_condition_14(terminal_penalty, &agg, delta);
        Ok(Self {
            venues,
            agg,
            quantity,
            horizon,
            risk_aversion,
            terminal_penalty,
            sigma,
            delta,
            branch,
            varsigma,
            condition_14,
            riccati,
        })
    }

    pub fn venues(&self) -> &VenueSet {
        &self.venues
    }

    pub fn aggregates(&self) -> &ImpactAggregates {
        &self.agg
    }

    pub fn quantity(&self) -> f64 {
        self.quantity
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn risk_aversion(&self) -> f64 {
        self.risk_aversion
    }

    pub fn terminal_penalty(&self) -> f64 {
        self.terminal_penalty
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn varsigma(&self) -> Option<f64> {
        self.varsigma
    }

    /// Whether the penalty-dominance condition holds; when it fails the
    /// formulas still evaluate but the feedback policy may be inadmissible.
    pub fn condition_14(&self) -> bool {
        self.condition_14
    }

    /// Value-function coefficient `h(t)`.
    pub fn h(&self, t: f64) -> f64 {
        self.riccati.h_at_tau(self.horizon - t, self.horizon)
    }

    /// `J(t, q) = h(t) q^2`.
    pub fn value(&self, t: f64, q: f64) -> f64 {
        self.h(t) * q * q
    }

    /// Per-venue feedback coefficients `-(1/2 eta_n)(2h + eta_per beta_n)`;
    /// the rate in venue `n` is the coefficient times inventory.
    pub fn rate_coefficients(&self, t: f64) -> Vec<f64> {
        let h = self.h(t);
        self.venues
            .venues()
            .iter()
            .map(|v| -(2.0 * h + self.venues.eta_per() * v.beta) / (2.0 * v.eta_tem))
            .collect()
    }

    /// Optimal per-venue rates at `(t, q)`.
    pub fn rates(&self, t: f64, q: f64) -> Vec<f64> {
        self.rate_coefficients(t)
            .into_iter()
            .map(|c| c * q)
            .collect()
    }

    /// `d ln X / dt`: nonpositive under the penalty condition.
    pub fn inventory_log_slope(&self, t: f64) -> f64 {
        -self.rate_coefficients(t).iter().sum::<f64>()
    }

    /// Exact inventory at time `t` along the feedback policy.
    /// The decay integrand `sum_n (1/2 eta_n)(2h + eta_per beta_n)` collapses
    /// to `a v` with `v = h + b/2a`, whose integral has a closed form.
    pub fn inventory(&self, t: f64) -> f64 {
        let log_decay = 0.5
            * self
                .riccati
                .log_growth(self.horizon - t, self.horizon, self.horizon);
        self.quantity * log_decay.exp()
    }

    /// Trading curve sampled on a uniform grid of `n` intervals over
    /// `[0, T)`, with the inventory integral done by the trapezoid rule.
    pub fn trajectory(&self, n: usize) -> TradingCurve {
        let n = n.max(2);
        let dt = self.horizon / n as f64;
        let mut times = Vec::with_capacity(n + 1);
        let mut inventory = Vec::with_capacity(n + 1);
        let mut rates = Vec::with_capacity(n + 1);
        let mut decay = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let t = if k == n { self.horizon } else { k as f64 * dt };
            times.push(t);
            decay.push(self.inventory_log_slope(t));
        }
        let cum = crate::numerics::cumulative_trapezoid(&decay, dt);
        for k in 0..=n {
            let x = self.quantity * cum[k].exp();
            inventory.push(x);
            let coeffs = self.rate_coefficients(times[k]);
            rates.push(coeffs.into_iter().map(|c| c * x).collect());
        }
        TradingCurve {
            times,
            inventory,
            rates,
        }
    }
}

/// Fourth-order Runge-Kutta verification of the `h` closed form: integrates
/// the Riccati equation backward from `h(T) = -K` and returns `h` on `grid`
/// (ascending, ending at the horizon). Every interval is stepped twice (once
/// whole, twice halved) and the Richardson error estimate must stay within
/// `1e-6`, otherwise `StepTooLarge` is returned. `substeps` sub-divides each
/// grid interval.
pub fn h_ode_oracle(
    sol: &ConstantVolSolution,
    grid: &[f64],
    substeps: usize,
) -> Result<Vec<f64>, SolverError> {
    const LOCAL_TOL: f64 = 1e-6;
    if grid.len() < 2 {
        return Err(SolverError::Invalid(
            "oracle grid needs at least two nodes".into(),
        ));
    }
    if (grid[grid.len() - 1] - sol.horizon()).abs() > 1e-12 {
        return Err(SolverError::Invalid(
            "oracle grid must end at the horizon".into(),
        ));
    }
    let a = sol.aggregates().a;
    let b2a = sol.aggregates().b / (2.0 * a);
    let delta = sol.delta();
    // dh/dtau with tau = T - t (integrate forward in tau).
    let f = |h: f64| -> f64 {
        let v = h + b2a;
        -delta + a * v * v
    };
    let rk4 = |h: f64, dt: f64| -> f64 {
        let k1 = f(h);
        let k2 = f(h + 0.5 * dt * k1);
        let k3 = f(h + 0.5 * dt * k2);
        let k4 = f(h + dt * k3);
        h + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    let m = substeps.max(1);
    let mut out = vec![0.0; grid.len()];
    let last = grid.len() - 1;
    out[last] = -sol.terminal_penalty();
    let mut h = out[last];
    for i in (0..last).rev() {
        let dtau = grid[i + 1] - grid[i];
        if dtau <= 0.0 {
            return Err(SolverError::Invalid("oracle grid must be ascending".into()));
        }
        let step = dtau / m as f64;
        for _ in 0..m {
            let coarse = rk4(h, step);
            let fine = rk4(rk4(h, 0.5 * step), 0.5 * step);
            let estimate = (fine - coarse).abs() / 15.0;
            if estimate > LOCAL_TOL {
                return Err(SolverError::StepTooLarge {
                    estimate,
                    tolerance: LOCAL_TOL,
                });
            }
            h = fine;
        }
        out[i] = h;
    }
    Ok(out)
}

/// Per-venue feedback coefficient for `n` identical venues, so the rate in
/// each venue is this coefficient times the remaining inventory.
#[allow(clippy::too_many_arguments)]
pub fn equal_venue_rate_coefficient(
    t: f64,
    n: usize,
    risk_aversion: f64,
    sigma: f64,
    eta_tem: f64,
    eta_per: f64,
    terminal_penalty: f64,
    horizon: f64,
) -> Result<f64, SolverError> {
    let venues = VenueSet::equal(n, eta_tem, eta_per)?;
    let sol =
        ConstantVolSolution::new(venues, 1.0, horizon, risk_aversion, terminal_penalty, sigma)?;
    let h = sol.h(t);
    Ok(-(2.0 * h + eta_per / n as f64) / (2.0 * eta_tem))
}
