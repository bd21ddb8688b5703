//! Linear market-impact model shared by all solvers.
//!
//! A sell program of `Q` shares over `[0, T]` trades across `N` venues.
//! Each venue charges a temporary price concession `eta_tem * rate` on its
//! own executions, while the common (affected) price drifts down by
//! `eta_per * sum(beta_n * rate_n)`; the no-arbitrage weights `beta_n`
//! sum to one. Any position left at the close is cleared against a linear
//! penalty `K * q` per share.

use serde::{Deserialize, Serialize};

use crate::error::MarketError;
use crate::stochvol::{OuParams, VolMap};

/// Absolute tolerance on `sum(beta) == 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Rates this slightly negative are treated as rounding noise.
pub const RATE_TOL: f64 = 1e-9;

/// A single venue: efficiency weight and temporary impact coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Venue {
    pub beta: f64,
    pub eta_tem: f64,
}

/// Validated set of venues plus the common permanent impact coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct VenueSet {
    venues: Vec<Venue>,
    eta_per: f64,
}

impl VenueSet {
    /// Validates raw `(beta, eta_tem)` pairs. A single venue with beta = 1
    /// is accepted as the degenerate one-venue case.
    pub fn new(raw: &[(f64, f64)], eta_per: f64) -> Result<Self, MarketError> {
        if raw.is_empty() {
            return Err(MarketError::WeightsNotSimplex("no venues given".into()));
        }
        let mut sum = 0.0;
        for (i, &(beta, eta_tem)) in raw.iter().enumerate() {
            if !(beta > 0.0 && beta <= 1.0) || !beta.is_finite() {
                return Err(MarketError::WeightsNotSimplex(format!(
                    "beta[{i}] = {beta} outside (0, 1]"
                )));
            }
            if !(eta_tem > 0.0) || !eta_tem.is_finite() {
                return Err(MarketError::NonpositiveImpact(format!(
                    "eta_tem[{i}] = {eta_tem}"
                )));
            }
            sum += beta;
        }
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(MarketError::WeightsNotSimplex(format!(
                "sum(beta) = {sum}, expected 1"
            )));
        }
        if !(eta_per >= 0.0) || !eta_per.is_finite() {
            return Err(MarketError::NonpositiveImpact(format!(
                "eta_per = {eta_per}"
            )));
        }
        Ok(Self {
            venues: raw
                .iter()
                .map(|&(beta, eta_tem)| Venue { beta, eta_tem })
                .collect(),
            eta_per,
        })
    }

    /// `n` identical venues with weight 1/n each.
    pub fn equal(n: usize, eta_tem: f64, eta_per: f64) -> Result<Self, MarketError> {
        if n == 0 {
            return Err(MarketError::WeightsNotSimplex("no venues given".into()));
        }
        // Spread rounding so the weights sum to exactly one.
        let beta = 1.0 / n as f64;
        let mut raw = vec![(beta, eta_tem); n];
        let sum: f64 = raw.iter().map(|v| v.0).sum();
        raw[0].0 += 1.0 - sum;
        Self::new(&raw, eta_per)
    }

    pub fn len(&self) -> usize {
        self.venues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.venues.is_empty()
    }

    pub fn venues(&self) -> &[Venue] {
        &self.venues
    }

    pub fn eta_per(&self) -> f64 {
        self.eta_per
    }

    /// Aggregated Riccati coefficients `a = sum 1/eta_n`,
    /// `b = sum eta_per beta_n / eta_n`, `c = sum (eta_per beta_n)^2 / (4 eta_n)`.
    pub fn aggregates(&self) -> ImpactAggregates {
        let mut per_venue = Vec::with_capacity(self.venues.len());
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for v in &self.venues {
            let a_n = 1.0 / v.eta_tem;
            let b_n = self.eta_per * v.beta / v.eta_tem;
            let c_n = (self.eta_per * v.beta).powi(2) / (4.0 * v.eta_tem);
            per_venue.push(VenueAggregates { a_n, b_n, c_n });
            a += a_n;
            b += b_n;
            c += c_n;
        }
        let agg = ImpactAggregates { per_venue, a, b, c };
        debug_assert!(agg.discriminant() <= 1e-9 * (agg.b * agg.b).max(1.0));
        agg
    }

    /// Permanent drift magnitude `eta_per * sum(beta_n * rate_n)`.
    pub fn permanent_drift(&self, rates: &[f64]) -> Result<f64, MarketError> {
        if rates.len() != self.venues.len() {
            return Err(MarketError::LengthMismatch {
                expected: self.venues.len(),
                got: rates.len(),
            });
        }
        Ok(self.eta_per
            * self
                .venues
                .iter()
                .zip(rates)
                .map(|(v, r)| v.beta * r)
                .sum::<f64>())
    }
}

/// Per-venue contribution to the aggregates; `b_n^2 = 4 a_n c_n` holds exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VenueAggregates {
    pub a_n: f64,
    pub b_n: f64,
    pub c_n: f64,
}

/// Summed impact aggregates. By the Cauchy-Schwarz bound `b^2 - 4ac <= 0`,
/// with equality iff there is one venue or all venues are identical.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactAggregates {
    pub per_venue: Vec<VenueAggregates>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ImpactAggregates {
    pub fn discriminant(&self) -> f64 {
        self.b * self.b - 4.0 * self.a * self.c
    }
}

/// Price actually received in a venue: `mid - eta_tem * rate`.
pub fn execution_price(mid: f64, eta_tem: f64, rate: f64) -> f64 {
    mid - eta_tem * rate
}

/// Cash for clearing `q` leftover shares at price `s` under the linear
/// penalty `K q` per share: `q (s - K q)`.
pub fn terminal_liquidation_value(q: f64, s: f64, terminal_penalty: f64) -> f64 {
    q * (s - terminal_penalty * q)
}

/// Volatility specification for the price process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VolatilityModel {
    Constant { sigma: f64 },
    SlowOu { ou: OuParams, vol_map: VolMap },
}

impl VolatilityModel {
    pub fn validate(&self) -> Result<(), MarketError> {
        match self {
            VolatilityModel::Constant { sigma } => {
                if !(sigma > &0.0) || !sigma.is_finite() {
                    return Err(MarketError::InvalidParameter(format!("sigma = {sigma}")));
                }
            }
            VolatilityModel::SlowOu { ou, vol_map } => {
                ou.validate()
                    .map_err(|e| MarketError::InvalidParameter(e.to_string()))?;
                if let VolMap::Const(c) = vol_map {
                    if !(c > &0.0) {
                        return Err(MarketError::InvalidParameter(format!(
                            "vol map constant = {c}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Liquidation mandate and preferences.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Shares to liquidate.
    pub quantity: f64,
    /// Trading horizon.
    pub horizon: f64,
    /// Risk aversion weighting the accumulated quadratic variation.
    pub risk_aversion: f64,
    /// Slope of the linear terminal clearing penalty.
    pub terminal_penalty: f64,
    pub vol: VolatilityModel,
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), MarketError> {
        if !(self.quantity > 0.0) {
            return Err(MarketError::InvalidParameter(format!(
                "quantity = {}",
                self.quantity
            )));
        }
        if !(self.horizon > 0.0) {
            return Err(MarketError::InvalidParameter(format!(
                "horizon = {}",
                self.horizon
            )));
        }
        if !(self.risk_aversion >= 0.0) {
            return Err(MarketError::InvalidParameter(format!(
                "risk_aversion = {}",
                self.risk_aversion
            )));
        }
        if !(self.terminal_penalty > 0.0) {
            return Err(MarketError::InvalidParameter(format!(
                "terminal_penalty = {}",
                self.terminal_penalty
            )));
        }
        self.vol.validate()
    }
}

/// Outcome of checking a sampled rate path against the admissibility rules:
/// nonnegative rates and total volume within the mandate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    pub nonnegative: bool,
    /// Trapezoidal integral of the summed rates stays within `quantity`.
    pub consistent: bool,
    /// Largest constraint violation found (0 when fully admissible).
    pub max_violation: f64,
}

/// Checks a per-venue rate path sampled on `times` (ascending, covering
/// `[0, horizon)`). The integral uses the trapezoid rule between samples and
/// holds the last sample constant up to the horizon.
pub fn check_admissibility(
    times: &[f64],
    rates: &[Vec<f64>],
    quantity: f64,
    horizon: f64,
) -> AdmissibilityReport {
    assert_eq!(times.len(), rates.len(), "one rate vector per sample time");
    let mut min_rate = 0.0f64;
    let mut totals = Vec::with_capacity(times.len());
    for step in rates {
        let mut sum = 0.0;
        for &r in step {
            min_rate = min_rate.min(r);
            sum += r;
        }
        totals.push(sum);
    }
    let mut integral = 0.0;
    for i in 1..times.len() {
        integral += 0.5 * (totals[i - 1] + totals[i]) * (times[i] - times[i - 1]);
    }
    if let (Some(&t_last), Some(&total_last)) = (times.last(), totals.last()) {
        if t_last < horizon {
            integral += total_last * (horizon - t_last);
        }
    }
    let nonnegative = min_rate >= -RATE_TOL;
    let consistent = integral <= quantity * (1.0 + RATE_TOL);
    AdmissibilityReport {
        nonnegative,
        consistent,
        max_violation: (-min_rate).max(integral - quantity).max(0.0),
    }
}
