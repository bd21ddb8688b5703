//! Slow mean-reverting stochastic volatility (single venue).
//!
//! The volatility is `phi(nu_t)` for an OU factor
//! `d nu = epsilon (m - nu) dt + xi sqrt(epsilon) dB` in the regime
//! `epsilon << 1`. The value-function coefficient expands as
//! `h = h0 + epsilon h1 + O(epsilon^2)`:
//! `h0(t, nu)` is the constant-volatility solution frozen at `sigma = phi(nu)`
//! and `h1` integrates the slow generator applied to `h0` against an
//! exponential discount built from `h0` itself. A finite-difference oracle
//! for the full `h(t, nu)` lives in [`crate::pde`].

use serde::{Deserialize, Serialize};

use crate::constvol::RiccatiClosedForm;
use crate::error::SolverError;
use crate::numerics::{simpson, simpson_converged};

/// Ornstein-Uhlenbeck factor parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    /// Long-run mean of the factor.
    pub mean: f64,
    /// Mean-reversion time scale (small in the slow regime).
    pub epsilon: f64,
    /// Degree of fluctuation around the mean (enters as `xi sqrt(epsilon)`).
    pub xi: f64,
    /// Correlation between price and factor shocks.
    pub rho: f64,
}

impl OuParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(SolverError::Invalid(format!("epsilon = {}", self.epsilon)));
        }
        if !(self.xi > 0.0) {
            return Err(SolverError::Invalid(format!("xi = {}", self.xi)));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(SolverError::Invalid(format!("rho = {}", self.rho)));
        }
        Ok(())
    }
}

/// Map from the factor to the volatility level. Exponential by default;
/// a constant map is useful for degenerate checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolMap {
    Exp,
    Const(f64),
}

impl VolMap {
    pub fn eval(&self, nu: f64) -> f64 {
        match self {
            VolMap::Exp => nu.exp(),
            VolMap::Const(c) => *c,
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, VolMap::Const(_))
    }
}

/// Exact Gaussian transition of the OU factor:
/// mean `m + (nu0 - m) e^{-eps t}`, variance `xi^2/2 (1 - e^{-2 eps t})`.
pub fn ou_transition(nu0: f64, t: f64, ou: &OuParams) -> (f64, f64) {
    let decay = (-ou.epsilon * t).exp();
    let mean = ou.mean + (nu0 - ou.mean) * decay;
    let var = 0.5 * ou.xi * ou.xi * (1.0 - decay * decay);
    (mean, var)
}

/// Single-venue model with the slow volatility factor.
#[derive(Debug, Clone)]
pub struct SlowVolModel {
    pub ou: OuParams,
    pub vol_map: VolMap,
    pub eta_tem: f64,
    pub eta_per: f64,
    pub risk_aversion: f64,
    pub terminal_penalty: f64,
    pub horizon: f64,
    /// Base subinterval count for the `h1` quadrature (doubled on demand).
    pub quadrature_base: usize,
    /// Relative step for the finite differences in the factor direction.
    pub fd_step_scale: f64,
}

/// Cap on quadrature refinement before giving up.
const MAX_SUBINTERVALS: usize = 1 << 18;

impl SlowVolModel {
    pub fn new(
        ou: OuParams,
        vol_map: VolMap,
        eta_tem: f64,
        eta_per: f64,
        risk_aversion: f64,
        terminal_penalty: f64,
        horizon: f64,
    ) -> Result<Self, SolverError> {
        ou.validate()?;
        if !(eta_tem > 0.0) || !(eta_per >= 0.0) {
            return Err(SolverError::Invalid(format!(
                "impact coefficients eta_tem = {eta_tem}, eta_per = {eta_per}"
            )));
        }
        if !(risk_aversion >= 0.0) || !(horizon > 0.0) {
            return Err(SolverError::Invalid(format!(
                "risk_aversion = {risk_aversion}, horizon = {horizon}"
            )));
        }
        // Keeps v = h + eta_per/2 strictly negative, so the closed forms
        // never cross their unstable fixed point.
        if !(2.0 * terminal_penalty > eta_per) {
            return Err(SolverError::InfeasiblePenalty);
        }
        Ok(Self {
            ou,
            vol_map,
            eta_tem,
            eta_per,
            risk_aversion,
            terminal_penalty,
            horizon,
            quadrature_base: 200,
            fd_step_scale: 1e-4,
        })
    }

    fn riccati_at(&self, nu: f64) -> RiccatiClosedForm {
        let sigma = self.vol_map.eval(nu);
        RiccatiClosedForm {
            a: 1.0 / self.eta_tem,
            b_over_2a: 0.5 * self.eta_per,
            delta: self.risk_aversion * sigma * sigma,
            terminal_penalty: self.terminal_penalty,
        }
    }

    /// Zeroth-order coefficient: the constant-volatility `h` frozen at
    /// `sigma = phi(nu)`.
    pub fn h0(&self, t: f64, nu: f64) -> f64 {
        self.riccati_at(nu).h_at_tau(self.horizon - t, self.horizon)
    }

    /// Slow generator applied to `h0`:
    /// `(m - nu) d_nu h0 + xi^2/2 d_nunu h0`, by central differences.
    pub fn generator_l0_h0(&self, t: f64, nu: f64) -> f64 {
        if self.vol_map.is_flat() {
            return 0.0;
        }
        let step = self.fd_step_scale * nu.abs().max(1.0);
        let up = self.h0(t, nu + step);
        let mid = self.h0(t, nu);
        let down = self.h0(t, nu - step);
        let first = (up - down) / (2.0 * step);
        let second = (up - 2.0 * mid + down) / (step * step);
        (self.ou.mean - nu) * first + 0.5 * self.ou.xi * self.ou.xi * second
    }

    /// Discount factor `exp((1/eta) int_t^r (2 h0 + eta_per) dtau)` at fixed
    /// `nu`, evaluated through the analytic integral of the closed form.
    pub fn growth_factor(&self, nu: f64, t: f64, r: f64) -> f64 {
        let rc = self.riccati_at(nu);
        rc.log_growth(self.horizon - r, self.horizon - t, self.horizon)
            .exp()
    }

    /// First-order correction
    /// `h1(t, nu) = int_t^T D(r; t) L0 h0(r, nu) dr`, by composite Simpson
    /// with subinterval doubling until 1e-8 relative stability.
    pub fn h1(&self, t: f64, nu: f64) -> Result<f64, SolverError> {
        if self.vol_map.is_flat() {
            return Ok(0.0);
        }
        let f = |r: f64| self.growth_factor(nu, t, r) * self.generator_l0_h0(r, nu);
        simpson_converged(
            &f,
            t,
            self.horizon,
            self.quadrature_base,
            1e-8,
            MAX_SUBINTERVALS,
        )
    }

    /// `h1` on a fixed subdivision, without the convergence loop.
    pub(crate) fn h1_fixed(&self, t: f64, nu: f64, n_sub: usize) -> f64 {
        if self.vol_map.is_flat() {
            return 0.0;
        }
        let f = |r: f64| self.growth_factor(nu, t, r) * self.generator_l0_h0(r, nu);
        simpson(&f, t, self.horizon, n_sub)
    }

    /// Constant-volatility feedback rate re-evaluated at the current factor
    /// level: `-(1/2 eta)(2 h0(t, nu) + eta_per) q`.
    pub fn theta_moving_constant(&self, t: f64, nu: f64, q: f64) -> f64 {
        -(2.0 * self.h0(t, nu) + self.eta_per) / (2.0 * self.eta_tem) * q
    }

    /// First-order corrected rate: adds `- (epsilon/eta) h1 q`.
    pub fn theta_corrected(&self, t: f64, nu: f64, q: f64) -> Result<f64, SolverError> {
        let base = self.theta_moving_constant(t, nu, q);
        let h1 = self.h1(t, nu)?;
        Ok(base - self.ou.epsilon / self.eta_tem * h1 * q)
    }

    /// `theta_corrected` with a precomputed `h1` value.
    pub fn theta_corrected_with_h1(&self, t: f64, nu: f64, q: f64, h1: f64) -> f64 {
        self.theta_moving_constant(t, nu, q) - self.ou.epsilon / self.eta_tem * h1 * q
    }
}
