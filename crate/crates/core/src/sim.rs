//! Monte Carlo engine for the three market settings.
//!
//! Paths follow the discrete procedures of the analytic models: rates are
//! evaluated at the left endpoint of each step, cash accrues at the
//! temporary-impact execution price, the affected price drifts with the
//! permanent impact and then receives a binomial `+-sigma sqrt(dt)` shock
//! (a Gaussian option exists behind a flag). Whatever inventory remains at
//! the horizon is cleared against the linear terminal penalty. Paths are
//! embarrassingly parallel; each one derives its own random streams from
//! `(seed, path_index)`, so ensembles are identical for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constvol::ConstantVolSolution;
use crate::error::{SolverError, StatsError};
use crate::lob::{adverse_jump_prob, theta_ml, LobCoefficients, LobParams, MoOnlySolution};
use crate::market::{terminal_liquidation_value, VenueSet};
use crate::rng::PathStreams;
use crate::stochvol::SlowVolModel;

/// Strategy selector for scenario configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    ConstantVol,
    MovingConstantVol,
    VolAdjusted,
    MoOnly,
    MarketAndLimit,
}

impl StrategyKind {
    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::ConstantVol => "constant_vol",
            StrategyKind::MovingConstantVol => "moving_constant_vol",
            StrategyKind::VolAdjusted => "vol_adjusted",
            StrategyKind::MoOnly => "mo_only",
            StrategyKind::MarketAndLimit => "market_and_limit",
        }
    }
}

/// Price-shock distribution; the binomial scheme is the reference one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShockKind {
    #[default]
    Binomial,
    Gaussian,
}

impl ShockKind {
    fn draw(&self, stream: &mut crate::rng::Stream) -> f64 {
        match self {
            ShockKind::Binomial => stream.coin(),
            ShockKind::Gaussian => stream.normal(),
        }
    }
}

/// Recorded states of one path (left step endpoints plus the close).
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub inventory: Vec<f64>,
    pub price: Vec<f64>,
    pub rate: Vec<f64>,
}

/// Outcome of a single simulated path.
#[derive(Debug, Clone)]
pub struct PathResult {
    /// Realized cash minus the arrival-price mark `Q * S0`.
    pub gain_loss: f64,
    /// `risk_aversion * int sigma^2 X^2 dt` (cash units).
    pub qv_penalty: f64,
    /// `gain_loss - qv_penalty`.
    pub objective: f64,
    /// Inventory carried into the terminal trade.
    pub final_inventory: f64,
    pub trajectory: Option<Trajectory>,
}

/// Sample moments: mean, n-1 standard deviation, and population-moment
/// skewness / raw kurtosis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentStats {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// Moments of a sample; skewness and raw kurtosis need at least four
/// points and a nonzero variance.
pub fn summary_stats(samples: &[f64]) -> Result<MomentStats, StatsError> {
    if samples.len() < 4 {
        return Err(StatsError::TooFewSamples {
            needed: 4,
            got: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return Err(StatsError::DegenerateSample);
    }
    Ok(MomentStats {
        mean,
        std: (m2 * n / (n - 1.0)).sqrt(),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
    })
}

/// Ensemble summary over the gain/loss samples of a batch of paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mean: f64,
    pub std: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub mean_objective: f64,
    pub mean_final_inventory: f64,
    pub std_final_inventory: f64,
}

impl EnsembleStats {
    pub fn from_paths(paths: &[PathResult]) -> Self {
        let gl: Vec<f64> = paths.iter().map(|p| p.gain_loss).collect();
        let inv: Vec<f64> = paths.iter().map(|p| p.final_inventory).collect();
        let n = paths.len() as f64;
        let mean = gl.iter().sum::<f64>() / n;
        let mean_inv = inv.iter().sum::<f64>() / n;
        let var = |xs: &[f64], m: f64| {
            if xs.len() < 2 {
                0.0
            } else {
                xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
            }
        };
        let (skewness, kurtosis) = match summary_stats(&gl) {
            Ok(s) => (Some(s.skewness), Some(s.kurtosis)),
            Err(_) => (None, None),
        };
        EnsembleStats {
            mean,
            std: var(&gl, mean).sqrt(),
            skewness,
            kurtosis,
            mean_objective: paths.iter().map(|p| p.objective).sum::<f64>() / n,
            mean_final_inventory: mean_inv,
            std_final_inventory: var(&inv, mean_inv).sqrt(),
        }
    }
}

/// Runs `n_paths` independent paths with per-path streams derived from the
/// seed; results come back in path order regardless of scheduling.
pub fn run_ensemble<F>(n_paths: u64, seed: u64, path_fn: F) -> Vec<PathResult>
where
    F: Fn(u64, &mut PathStreams) -> PathResult + Sync,
{
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut streams = PathStreams::new(seed, i);
            path_fn(i, &mut streams)
        })
        .collect()
}

fn validate_steps(horizon: f64, dt: f64) -> Result<usize, SolverError> {
    if !(dt > 0.0) {
        return Err(SolverError::Invalid(format!("dt = {dt}")));
    }
    let steps_f = horizon / dt;
    let steps = steps_f.round();
    if (steps_f - steps).abs() > 1e-9 * steps.max(1.0) || steps < 1.0 {
        return Err(SolverError::Invalid(format!(
            "horizon/dt = {steps_f} must be a whole number of steps"
        )));
    }
    Ok(steps as usize)
}

// ---------------------------------------------------------------------------
// Constant volatility
// ---------------------------------------------------------------------------

/// Constant-volatility Monte Carlo driver built around a closed-form
/// feedback solution.
pub struct ConstantVolSim<'a> {
    pub solution: &'a ConstantVolSolution,
    pub initial_price: f64,
    pub dt: f64,
    pub shocks: ShockKind,
}

impl ConstantVolSim<'_> {
    pub fn steps(&self) -> Result<usize, SolverError> {
        validate_steps(self.solution.horizon(), self.dt)
    }

    /// One path under the optimal feedback rates.
    pub fn run_path(&self, streams: &mut PathStreams, record: bool) -> PathResult {
        let sol = self.solution;
        self.run_path_with(
            |t, x, out| {
                for (slot, c) in out.iter_mut().zip(sol.rate_coefficients(t)) {
                    *slot = (c * x).max(0.0);
                }
            },
            streams,
            record,
        )
    }

    /// One path under an arbitrary per-venue rate rule (used to probe
    /// forced schedules).
    pub fn run_path_with<F>(
        &self,
        rates_fn: F,
        streams: &mut PathStreams,
        record: bool,
    ) -> PathResult
    where
        F: Fn(f64, f64, &mut [f64]),
    {
        let sol = self.solution;
        let venues = sol.venues();
        let n_venues = venues.len();
        let steps = self.steps().expect("validated dt");
        let sigma = sol.sigma();
        let sqrt_dt = self.dt.sqrt();
        let quantity = sol.quantity();

        let mut x = quantity;
        let mut cash = 0.0;
        let mut price = self.initial_price;
        let mut qv_raw = 0.0;
        let mut rates = vec![0.0; n_venues];
        let mut trajectory = record.then(Trajectory::default);

        for k in 0..steps {
            let t = k as f64 * self.dt;
            rates_fn(t, x, &mut rates);
            qv_raw += sigma * sigma * x * x * self.dt;
            let total: f64 = rates.iter().sum::<f64>() * self.dt;
            let scale = if total > x && total > 0.0 {
                x / total
            } else {
                1.0
            };
            if let Some(tr) = trajectory.as_mut() {
                tr.times.push(t);
                tr.inventory.push(x);
                tr.price.push(price);
                tr.rate.push(rates.iter().sum::<f64>() * scale);
            }
            let mut drift = 0.0;
            for (v, rate) in venues.venues().iter().zip(rates.iter()) {
                let r = rate * scale;
                cash += (price - v.eta_tem * r) * r * self.dt;
                drift += v.beta * r;
            }
            x -= total * scale;
            price -= venues.eta_per() * drift * self.dt;
            price += sigma * sqrt_dt * self.shocks.draw(&mut streams.price);
        }
        finish_path(
            x,
            cash,
            price,
            quantity,
            self.initial_price,
            sol.terminal_penalty(),
            sol.risk_aversion(),
            qv_raw,
            trajectory,
            sol.horizon(),
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_path(
    x: f64,
    mut cash: f64,
    price: f64,
    quantity: f64,
    initial_price: f64,
    terminal_penalty: f64,
    risk_aversion: f64,
    qv_raw: f64,
    mut trajectory: Option<Trajectory>,
    horizon: f64,
) -> PathResult {
    cash += terminal_liquidation_value(x, price, terminal_penalty);
    let gain_loss = cash - quantity * initial_price;
    let qv_penalty = risk_aversion * qv_raw;
    if let Some(tr) = trajectory.as_mut() {
        tr.times.push(horizon);
        tr.inventory.push(x);
        tr.price.push(price);
        tr.rate.push(0.0);
    }
    PathResult {
        gain_loss,
        qv_penalty,
        objective: gain_loss - qv_penalty,
        final_inventory: x,
        trajectory,
    }
}

// ---------------------------------------------------------------------------
// Slow stochastic volatility
// ---------------------------------------------------------------------------

/// Which rate rule the stochastic-volatility paths follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StochStrategy {
    /// Constant-volatility rates frozen at `sigma = phi(nu_0)`.
    Frozen,
    /// Re-evaluates the frozen rule at the current factor level.
    Moving,
    /// Adds the first-order correction in `epsilon`.
    Corrected,
}

impl From<StochStrategy> for StrategyKind {
    fn from(s: StochStrategy) -> Self {
        match s {
            StochStrategy::Frozen => StrategyKind::ConstantVol,
            StochStrategy::Moving => StrategyKind::MovingConstantVol,
            StochStrategy::Corrected => StrategyKind::VolAdjusted,
        }
    }
}

/// Bilinear table of `h1(t, nu)` so corrected-rate paths avoid a quadrature
/// per step.
struct H1Table {
    t0: f64,
    dt: f64,
    nu0: f64,
    dnu: f64,
    nt: usize,
    nnu: usize,
    values: Vec<f64>,
}

impl H1Table {
    fn build(model: &SlowVolModel, nu_lo: f64, nu_hi: f64, nt: usize, nnu: usize) -> Self {
        let dt = model.horizon / (nt - 1) as f64;
        let dnu = (nu_hi - nu_lo) / (nnu - 1) as f64;
        let values: Vec<f64> = (0..nt * nnu)
            .into_par_iter()
            .map(|idx| {
                let it = idx / nnu;
                let inu = idx % nnu;
                let t = (it as f64 * dt).min(model.horizon);
                let nu = nu_lo + inu as f64 * dnu;
                model.h1_fixed(t, nu, 200)
            })
            .collect();
        Self {
            t0: 0.0,
            dt,
            nu0: nu_lo,
            dnu,
            nt,
            nnu,
            values,
        }
    }

    fn eval(&self, t: f64, nu: f64) -> f64 {
        let ft = ((t - self.t0) / self.dt).clamp(0.0, (self.nt - 1) as f64);
        let fnu = ((nu - self.nu0) / self.dnu).clamp(0.0, (self.nnu - 1) as f64);
        let it = (ft as usize).min(self.nt - 2);
        let inu = (fnu as usize).min(self.nnu - 2);
        let wt = ft - it as f64;
        let wn = fnu - inu as f64;
        let at = |i: usize, j: usize| self.values[i * self.nnu + j];
        (1.0 - wt) * ((1.0 - wn) * at(it, inu) + wn * at(it, inu + 1))
            + wt * ((1.0 - wn) * at(it + 1, inu) + wn * at(it + 1, inu + 1))
    }
}

/// Stochastic-volatility Monte Carlo driver (single venue).
pub struct StochVolSim {
    pub model: SlowVolModel,
    pub nu_start: f64,
    pub quantity: f64,
    pub initial_price: f64,
    pub dt: f64,
    pub shocks: ShockKind,
    pub strategy: StochStrategy,
    h1_table: Option<H1Table>,
}

impl StochVolSim {
    pub fn new(
        model: SlowVolModel,
        nu_start: f64,
        quantity: f64,
        initial_price: f64,
        dt: f64,
        shocks: ShockKind,
        strategy: StochStrategy,
    ) -> Result<Self, SolverError> {
        validate_steps(model.horizon, dt)?;
        if !(quantity > 0.0) {
            return Err(SolverError::Invalid(format!("quantity = {quantity}")));
        }
        let h1_table = if strategy == StochStrategy::Corrected && !model.vol_map.is_flat() {
            let ou = &model.ou;
            let spread = ou.xi * (ou.epsilon * model.horizon).sqrt() * 6.0
                + ou.epsilon * (ou.mean - nu_start).abs() * model.horizon
                + 0.05;
            Some(H1Table::build(
                &model,
                nu_start - spread,
                nu_start + spread,
                161,
                161,
            ))
        } else {
            None
        };
        Ok(Self {
            model,
            nu_start,
            quantity,
            initial_price,
            dt,
            shocks,
            strategy,
            h1_table,
        })
    }

    fn rate(&self, t: f64, nu: f64, x: f64) -> f64 {
        let m = &self.model;
        let raw = match self.strategy {
            StochStrategy::Frozen => m.theta_moving_constant(t, self.nu_start, x),
            StochStrategy::Moving => m.theta_moving_constant(t, nu, x),
            StochStrategy::Corrected => {
                let h1 = match &self.h1_table {
                    Some(table) => table.eval(t, nu),
                    None => 0.0,
                };
                m.theta_corrected_with_h1(t, nu, x, h1)
            }
        };
        raw.max(0.0)
    }

    pub fn run_path(&self, streams: &mut PathStreams, record: bool) -> PathResult {
        let m = &self.model;
        let steps = validate_steps(m.horizon, self.dt).expect("validated dt");
        let sqrt_dt = self.dt.sqrt();
        let ou = &m.ou;
        let vol_scale = ou.xi * ou.epsilon.sqrt();
        let corr = (1.0 - ou.rho * ou.rho).sqrt();

        let mut x = self.quantity;
        let mut cash = 0.0;
        let mut price = self.initial_price;
        let mut nu = self.nu_start;
        let mut qv_raw = 0.0;
        let mut trajectory = record.then(Trajectory::default);

        for k in 0..steps {
            let t = k as f64 * self.dt;
            let sigma = m.vol_map.eval(nu);
            let theta = self.rate(t, nu, x);
            let amount = (theta * self.dt).min(x);
            let rate_eff = amount / self.dt;
            qv_raw += sigma * sigma * x * x * self.dt;
            if let Some(tr) = trajectory.as_mut() {
                tr.times.push(t);
                tr.inventory.push(x);
                tr.price.push(price);
                tr.rate.push(rate_eff);
            }
            cash += (price - m.eta_tem * rate_eff) * amount;
            x -= amount;
            price -= m.eta_per * rate_eff * self.dt;
            let s1 = self.shocks.draw(&mut streams.price);
            let s2 = self.shocks.draw(&mut streams.vol);
            price += sigma * sqrt_dt * s1;
            nu += ou.epsilon * (ou.mean - nu) * self.dt
                + vol_scale * (ou.rho * s1 + corr * s2) * sqrt_dt;
        }
        finish_path(
            x,
            cash,
            price,
            self.quantity,
            self.initial_price,
            m.terminal_penalty,
            m.risk_aversion,
            qv_raw,
            trajectory,
            m.horizon,
        )
    }
}

// ---------------------------------------------------------------------------
// Limit order book
// ---------------------------------------------------------------------------

/// Rate rule for the order-book setting.
pub enum LobStrategy {
    /// Market orders only; no resting asks, so counterparty flow never
    /// fills the trader and only the adverse down-jumps touch the bid.
    MoOnly(MoOnlySolution),
    /// Market orders plus a one-share resting ask (full event dynamics).
    MarketAndLimit(LobCoefficients),
}

impl LobStrategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            LobStrategy::MoOnly(_) => StrategyKind::MoOnly,
            LobStrategy::MarketAndLimit(_) => StrategyKind::MarketAndLimit,
        }
    }
}

/// Order-book Monte Carlo driver.
pub struct LobSim {
    pub strategy: LobStrategy,
    pub lob: LobParams,
    pub sigma: f64,
    pub quantity: f64,
    pub horizon: f64,
    pub terminal_penalty: f64,
    pub eta_tem: f64,
    pub eta_per: f64,
    pub risk_aversion: f64,
    pub initial_price: f64,
    pub dt: f64,
    pub shocks: ShockKind,
    fill_prob: f64,
    down_prob: f64,
}

impl LobSim {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        strategy: LobStrategy,
        lob: LobParams,
        sigma: f64,
        quantity: f64,
        horizon: f64,
        terminal_penalty: f64,
        eta_tem: f64,
        eta_per: f64,
        risk_aversion: f64,
        initial_price: f64,
        dt: f64,
        shocks: ShockKind,
    ) -> Result<Self, SolverError> {
        lob.validate()?;
        validate_steps(horizon, dt)?;
        if quantity.fract() != 0.0 || !(quantity > 0.0) {
            return Err(SolverError::Invalid(format!(
                "lob mandates must be a whole number of shares (unit fills), got {quantity}"
            )));
        }
        let fill_prob = lob.lambda_m * dt;
        if fill_prob > 0.1 {
            return Err(SolverError::Invalid(format!(
                "lambda_m * dt = {fill_prob} too large for the rare-event scheme; reduce dt"
            )));
        }
        let down_prob = adverse_jump_prob(lob.lambda_m, lob.eta_up, lob.eta_down, dt, false)?;
        Ok(Self {
            strategy,
            lob,
            sigma,
            quantity,
            horizon,
            terminal_penalty,
            eta_tem,
            eta_per,
            risk_aversion,
            initial_price,
            dt,
            shocks,
            fill_prob,
            down_prob,
        })
    }

    fn rate(&self, t: f64, x: f64) -> f64 {
        match &self.strategy {
            LobStrategy::MoOnly(mo) => mo.rate(t, x),
            LobStrategy::MarketAndLimit(c) => theta_ml(t, x, c),
        }
        .max(0.0)
    }

    pub fn run_path(&self, streams: &mut PathStreams, record: bool) -> PathResult {
        let steps = validate_steps(self.horizon, self.dt).expect("validated dt");
        let sqrt_dt = self.dt.sqrt();
        let uses_lo = matches!(self.strategy, LobStrategy::MarketAndLimit(_));

        let mut x = self.quantity;
        let mut cash = 0.0;
        let mut price = self.initial_price;
        let mut qv_raw = 0.0;
        let mut trajectory = record.then(Trajectory::default);

        for k in 0..steps {
            let t = k as f64 * self.dt;
            qv_raw += self.sigma * self.sigma * x * x * self.dt;
            let filled = uses_lo && x >= 1.0 && streams.events.uniform() < self.fill_prob;
            if let Some(tr) = trajectory.as_mut() {
                tr.times.push(t);
                tr.inventory.push(x);
                tr.price.push(price);
            }
            if filled {
                x -= 1.0;
                cash += price + self.lob.spread;
                price += self.lob.eta_jump;
                if let Some(tr) = trajectory.as_mut() {
                    tr.rate.push(0.0);
                }
            } else {
                let theta = self.rate(t, x);
                let amount = (theta * self.dt).min(x);
                let rate_eff = amount / self.dt;
                cash += (price - self.eta_tem * rate_eff) * amount;
                x -= amount;
                price -= self.eta_per * rate_eff * self.dt;
                if self.down_prob > 0.0 && streams.events.uniform() < self.down_prob {
                    price -= self.lob.eta_jump;
                }
                if let Some(tr) = trajectory.as_mut() {
                    tr.rate.push(rate_eff);
                }
            }
            price += self.sigma * sqrt_dt * self.shocks.draw(&mut streams.price);
        }
        finish_path(
            x,
            cash,
            price,
            self.quantity,
            self.initial_price,
            self.terminal_penalty,
            self.risk_aversion,
            qv_raw,
            trajectory,
            self.horizon,
        )
    }
}

// ---------------------------------------------------------------------------
// Frontier sweep
// ---------------------------------------------------------------------------

/// One point of the risk-aversion sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub risk_aversion: f64,
    pub std_gl: f64,
    pub mean_gl: f64,
}

/// Sweeps the risk-aversion grid (ascending, starting at zero) with common
/// random numbers: every ensemble reuses the same seed.
#[allow(clippy::too_many_arguments)]
pub fn efficient_frontier(
    venues: &VenueSet,
    quantity: f64,
    horizon: f64,
    terminal_penalty: f64,
    sigma: f64,
    initial_price: f64,
    lambdas: &[f64],
    n_paths: u64,
    seed: u64,
    dt: f64,
    shocks: ShockKind,
) -> Result<Vec<FrontierPoint>, SolverError> {
    if lambdas.is_empty() || lambdas[0] != 0.0 {
        return Err(SolverError::Invalid(
            "lambda grid must start at zero".into(),
        ));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SolverError::Invalid(
            "lambda grid must be strictly ascending".into(),
        ));
    }
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let sol = ConstantVolSolution::new(
            venues.clone(),
            quantity,
            horizon,
            lambda,
            terminal_penalty,
            sigma,
        )?;
        let sim = ConstantVolSim {
            solution: &sol,
            initial_price,
            dt,
            shocks,
        };
        let paths = run_ensemble(n_paths, seed, |_, streams| sim.run_path(streams, false));
        let stats = EnsembleStats::from_paths(&paths);
        out.push(FrontierPoint {
            risk_aversion: lambda,
            std_gl: stats.std,
            mean_gl: stats.mean,
        });
    }
    Ok(out)
}
