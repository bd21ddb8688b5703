//! Optimal liquidation of a block of shares under linear market impact.
//!
//! The library covers three settings that share one impact model:
//!
//! * [`constvol`] — closed-form mean-quadratic liquidation with constant
//!   volatility across several venues, plus the many-venue asymptotics;
//! * [`stochvol`] / [`pde`] — slow mean-reverting stochastic volatility,
//!   with a two-term expansion of the strategy and a finite-difference
//!   oracle for its accuracy;
//! * [`lob`] — a risk-neutral extension that rests unit limit orders and
//!   accounts for adverse selection in the fill flow.
//!
//! [`sim`] replays all of them through a deterministic Monte Carlo engine
//! and [`report`] exposes the scenario runner behind the `liquidator` CLI.

// `!(x > 0.0)` rather than `x <= 0.0` throughout validation: NaN must fail.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constvol;
pub mod error;
pub mod lob;
pub mod market;
pub mod numerics;
pub mod pde;
pub mod report;
pub mod rng;
pub mod sim;
pub mod stochvol;

pub use constvol::{ConstantVolSolution, TradingCurve};
pub use error::{MarketError, SolverError, StatsError};
pub use market::{ModelParams, VenueSet, VolatilityModel};
pub use sim::{EnsembleStats, PathResult, ShockKind, StrategyKind};
pub use stochvol::{OuParams, SlowVolModel, VolMap};
