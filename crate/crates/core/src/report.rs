//! Scenario configuration, dispatch, and file reports.
//!
//! A scenario is a single JSON document with a `setting` discriminator and
//! optional sweep lists (venue counts, strategies, a risk-aversion grid or
//! an epsilon grid). Numeric CSV cells carry 17 significant digits so a
//! rerun can be compared byte for byte; the JSON report mirrors the CSV
//! values and adds the metadata needed to reproduce the run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constvol::{ConstantVolSolution, TradingCurve, TRAJECTORY_GRID};
use crate::error::SolverError;
use crate::lob::{min_feasible_target, LobCoefficients, LobParams, MoOnlySolution};
use crate::market::VenueSet;
use crate::pde::residual_order_study;
use crate::sim::{
    efficient_frontier, run_ensemble, ConstantVolSim, EnsembleStats, FrontierPoint, LobSim,
    LobStrategy, PathResult, ShockKind, StochStrategy, StochVolSim, StrategyKind,
};
use crate::stochvol::{OuParams, SlowVolModel, VolMap};

/// Top-level errors for the command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(#[from] SolverError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl AppError {
    /// Process exit code: 2 for configuration, 3 for numerics, 1 for IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Numerical(_) => 3,
            AppError::Io { .. } => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AppError + '_ {
    move |source| AppError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    ConstantVol,
    StochVol,
    Lob,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VenueConfig {
    pub beta: f64,
    pub eta_tem: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuConfig {
    pub nu0: f64,
    pub mean: f64,
    pub epsilon: f64,
    pub xi: f64,
    pub rho: f64,
    #[serde(default = "default_vol_map")]
    pub phi: VolMap,
}

fn default_vol_map() -> VolMap {
    VolMap::Exp
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalConfig {
    pub a: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LobConfig {
    #[serde(default)]
    pub lambda_m: Option<f64>,
    #[serde(default)]
    pub arrival: Option<ArrivalConfig>,
    pub spread: f64,
    pub eta_up: f64,
    pub eta_down: f64,
    pub eta_jump: f64,
}

/// One scenario; unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub setting: Setting,
    pub quantity: f64,
    pub horizon: f64,
    pub risk_aversion: f64,
    pub terminal_penalty: f64,
    pub initial_price: f64,
    pub dt: f64,
    pub paths: u64,
    pub seed: u64,
    #[serde(default)]
    pub gaussian_shocks: bool,
    #[serde(default)]
    pub emit_paths: bool,
    #[serde(default)]
    pub curve_points: Option<usize>,
    /// Explicit venue list for the constant-volatility setting.
    #[serde(default)]
    pub venues: Option<Vec<VenueConfig>>,
    /// Equal-venue sweep (needs `eta_tem`).
    #[serde(default)]
    pub venue_counts: Option<Vec<usize>>,
    #[serde(default)]
    pub eta_tem: Option<f64>,
    #[serde(default)]
    pub eta_per: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub ou: Option<OuConfig>,
    #[serde(default)]
    pub strategies: Option<Vec<StrategyKind>>,
    #[serde(default)]
    pub lob: Option<LobConfig>,
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
}

impl ScenarioConfig {
    pub fn shocks(&self) -> ShockKind {
        if self.gaussian_shocks {
            ShockKind::Gaussian
        } else {
            ShockKind::Binomial
        }
    }

    fn require<T: Copy>(v: Option<T>, field: &str) -> Result<T, AppError> {
        v.ok_or_else(|| AppError::Config(format!("missing field `{field}` for this setting")))
    }

    fn eta_per(&self) -> Result<f64, AppError> {
        Self::require(self.eta_per, "eta_per")
    }

    fn eta_tem(&self) -> Result<f64, AppError> {
        Self::require(self.eta_tem, "eta_tem")
    }

    fn sigma(&self) -> Result<f64, AppError> {
        Self::require(self.sigma, "sigma")
    }

    /// Validates fields and cross-field requirements, building nothing.
    pub fn validate(&self) -> Result<(), AppError> {
        for (name, v) in [
            ("quantity", self.quantity),
            ("horizon", self.horizon),
            ("terminal_penalty", self.terminal_penalty),
            ("dt", self.dt),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(AppError::Config(format!(
                    "field `{name}` must be positive, got {v}"
                )));
            }
        }
        if !(self.risk_aversion >= 0.0) {
            return Err(AppError::Config(format!(
                "field `risk_aversion` must be nonnegative, got {}",
                self.risk_aversion
            )));
        }
        if self.paths == 0 {
            return Err(AppError::Config("field `paths` must be at least 1".into()));
        }
        let steps = self.horizon / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(AppError::Config(format!(
                "horizon/dt = {steps} must be a whole number of steps"
            )));
        }
        match self.setting {
            Setting::ConstantVol => {
                self.sigma()?;
                self.eta_per()?;
                if self.venue_counts.is_some() {
                    self.eta_tem()?;
                } else {
                    let venues = self.venues.as_ref().ok_or_else(|| {
                        AppError::Config("missing `venues` or `venue_counts`".into())
                    })?;
                    let raw: Vec<(f64, f64)> = venues.iter().map(|v| (v.beta, v.eta_tem)).collect();
                    VenueSet::new(&raw, self.eta_per.unwrap_or(0.0))
                        .map_err(|e| AppError::Config(e.to_string()))?;
                }
            }
            Setting::StochVol => {
                self.eta_per()?;
                self.eta_tem()?;
                if self.ou.is_none() {
                    return Err(AppError::Config("missing `ou` section".into()));
                }
            }
            Setting::Lob => {
                self.sigma()?;
                self.eta_per()?;
                self.eta_tem()?;
                let lob = self
                    .lob
                    .as_ref()
                    .ok_or_else(|| AppError::Config("missing `lob` section".into()))?;
                if lob.lambda_m.is_none() && lob.arrival.is_none() {
                    return Err(AppError::Config("lob needs `lambda_m` or `arrival`".into()));
                }
                self.lob_params()?
                    .validate()
                    .map_err(|e| AppError::Config(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn venue_set(&self, equal_count: Option<usize>) -> Result<VenueSet, AppError> {
        let eta_per = self.eta_per()?;
        match equal_count {
            Some(n) => VenueSet::equal(n, self.eta_tem()?, eta_per)
                .map_err(|e| AppError::Config(e.to_string())),
            None => {
                let venues = self
                    .venues
                    .as_ref()
                    .ok_or_else(|| AppError::Config("missing `venues`".into()))?;
                let raw: Vec<(f64, f64)> = venues.iter().map(|v| (v.beta, v.eta_tem)).collect();
                VenueSet::new(&raw, eta_per).map_err(|e| AppError::Config(e.to_string()))
            }
        }
    }

    pub fn slow_vol_model(&self) -> Result<SlowVolModel, AppError> {
        let ou = self
            .ou
            .as_ref()
            .ok_or_else(|| AppError::Config("missing `ou` section".into()))?;
        SlowVolModel::new(
            OuParams {
                mean: ou.mean,
                epsilon: ou.epsilon,
                xi: ou.xi,
                rho: ou.rho,
            },
            ou.phi,
            self.eta_tem()?,
            self.eta_per()?,
            self.risk_aversion,
            self.terminal_penalty,
            self.horizon,
        )
        .map_err(AppError::Numerical)
    }

    pub fn lob_params(&self) -> Result<LobParams, AppError> {
        let lob = self
            .lob
            .as_ref()
            .ok_or_else(|| AppError::Config("missing `lob` section".into()))?;
        let lambda_m = match (lob.lambda_m, &lob.arrival) {
            (Some(l), _) => l,
            (None, Some(arr)) => crate::lob::arrival_rate(arr.a, arr.kappa, lob.spread),
            (None, None) => {
                return Err(AppError::Config("lob needs `lambda_m` or `arrival`".into()))
            }
        };
        Ok(LobParams {
            lambda_m,
            spread: lob.spread,
            eta_up: lob.eta_up,
            eta_down: lob.eta_down,
            eta_jump: lob.eta_jump,
        })
    }
}

/// Loads and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, AppError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let cfg: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// CLI subcommands; each maps to one engine entry point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Simulate,
    Frontier,
    Residual,
    Lob,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Simulate => "simulate",
            Command::Frontier => "frontier",
            Command::Residual => "residual",
            Command::Lob => "lob",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Seconds since the Unix epoch at run time (metadata only; CSV output
    /// is byte-stable across reruns).
    pub unix_time: u64,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub paths: u64,
    pub mean_gl: f64,
    pub std_gl: f64,
    pub mean_q_t: f64,
    pub std_q_t: f64,
    pub mean_objective: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathRow {
    pub variant: String,
    pub path: u64,
    pub gain_loss: f64,
    pub qv_penalty: f64,
    pub objective: f64,
    pub final_inventory: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    pub epsilons: Vec<f64>,
    pub residuals: Vec<f64>,
    pub slope: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub h_start: f64,
    pub value_start: f64,
    pub condition_14: Option<bool>,
    pub delta: Option<f64>,
    pub terminal_inventory: Option<f64>,
    pub min_feasible_target: Option<f64>,
}

/// Everything a run produced, mirrored into `report.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBundle {
    pub metadata: RunMetadata,
    pub summary: Vec<SummaryRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frontier: Vec<FrontierPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<ResidualReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub paths: Vec<PathRow>,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
}

/// 17 significant digits: round-trip safe and byte-stable.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_full).unwrap_or_default()
}

fn write_file(path: &Path, content: &str) -> Result<(), AppError> {
    fs::write(path, content).map_err(io_err(path))
}

/// Writes a trading curve as `t, inventory, theta_1..theta_N`.
pub fn emit_trading_curve(curve: &TradingCurve, path: &Path) -> Result<(), AppError> {
    let n_venues = curve.rates.first().map_or(0, |r| r.len());
    let mut out = String::from("t,inventory");
    for n in 1..=n_venues {
        let _ = write!(out, ",theta_{n}");
    }
    out.push('\n');
    for k in 0..curve.times.len() {
        let _ = write!(
            out,
            "{},{}",
            fmt_full(curve.times[k]),
            fmt_full(curve.inventory[k])
        );
        for r in &curve.rates[k] {
            let _ = write!(out, ",{}", fmt_full(*r));
        }
        out.push('\n');
    }
    write_file(path, &out)
}

/// Writes frontier points as `lambda, std_gl, mean_gl` sorted by lambda.
pub fn emit_frontier(points: &[FrontierPoint], path: &Path) -> Result<(), AppError> {
    let mut out = String::from("lambda,std_gl,mean_gl\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_full(p.risk_aversion),
            fmt_full(p.std_gl),
            fmt_full(p.mean_gl)
        );
    }
    write_file(path, &out)
}

fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "label,paths,mean_gl,std_gl,mean_q_t,std_q_t,mean_objective,skewness,kurtosis\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.label,
            r.paths,
            fmt_full(r.mean_gl),
            fmt_full(r.std_gl),
            fmt_full(r.mean_q_t),
            fmt_full(r.std_q_t),
            fmt_full(r.mean_objective),
            fmt_opt(r.skewness),
            fmt_opt(r.kurtosis),
        );
    }
    out
}

fn paths_csv(rows: &[PathRow]) -> String {
    let mut out = String::from("variant,path,gain_loss,qv_penalty,objective,final_inventory\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.variant,
            r.path,
            fmt_full(r.gain_loss),
            fmt_full(r.qv_penalty),
            fmt_full(r.objective),
            fmt_full(r.final_inventory),
        );
    }
    out
}

fn residual_csv(r: &ResidualReport) -> String {
    let mut out = String::from("epsilon,residual\n");
    for (e, res) in r.epsilons.iter().zip(&r.residuals) {
        let _ = writeln!(out, "{},{}", fmt_full(*e), fmt_full(*res));
    }
    out
}

fn summarize(label: &str, paths: &[PathResult]) -> SummaryRow {
    let stats = EnsembleStats::from_paths(paths);
    SummaryRow {
        label: label.to_string(),
        paths: paths.len() as u64,
        mean_gl: stats.mean,
        std_gl: stats.std,
        mean_q_t: stats.mean_final_inventory,
        std_q_t: stats.std_final_inventory,
        mean_objective: stats.mean_objective,
        skewness: stats.skewness,
        kurtosis: stats.kurtosis,
    }
}

fn collect_paths(rows: &mut Vec<PathRow>, variant: &str, paths: &[PathResult], keep: bool) {
    if !keep {
        return;
    }
    rows.extend(paths.iter().enumerate().map(|(i, p)| PathRow {
        variant: variant.to_string(),
        path: i as u64,
        gain_loss: p.gain_loss,
        qv_penalty: p.qv_penalty,
        objective: p.objective,
        final_inventory: p.final_inventory,
    }));
}

struct RunContext<'a> {
    cfg: &'a ScenarioConfig,
    out_dir: PathBuf,
    files: Vec<String>,
}

impl RunContext<'_> {
    fn emit(&mut self, name: &str, content: &str) -> Result<(), AppError> {
        write_file(&self.out_dir.join(name), content)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Runs a subcommand against a validated configuration, writing outputs
/// under `out_dir` and returning the bundle that was mirrored to
/// `report.json`. Exit codes on failure: 2 config, 3 numerical, 1 IO.
pub fn run_scenario(
    command: Command,
    cfg: &ScenarioConfig,
    out_dir: &Path,
) -> Result<ReportBundle, AppError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut ctx = RunContext {
        cfg,
        out_dir: out_dir.to_path_buf(),
        files: Vec::new(),
    };

    let mut summary = Vec::new();
    let mut frontier = Vec::new();
    let mut residual = None;
    let mut solve = None;
    let mut path_rows = Vec::new();

    match command {
        Command::Solve => {
            solve = Some(run_solve(&mut ctx)?);
        }
        Command::Simulate => {
            run_simulate(&mut ctx, &mut summary, &mut path_rows)?;
        }
        Command::Frontier => {
            if cfg.setting != Setting::ConstantVol {
                return Err(AppError::Config(
                    "frontier needs the constant_vol setting".into(),
                ));
            }
            let grid = cfg
                .lambda_grid
                .as_ref()
                .ok_or_else(|| AppError::Config("missing `lambda_grid`".into()))?;
            let venues = cfg.venue_set(cfg.venue_counts.as_ref().map(|v| v[0]))?;
            frontier = efficient_frontier(
                &venues,
                cfg.quantity,
                cfg.horizon,
                cfg.terminal_penalty,
                cfg.sigma()?,
                cfg.initial_price,
                grid,
                cfg.paths,
                cfg.seed,
                cfg.dt,
                cfg.shocks(),
            )?;
            emit_frontier(&frontier, &ctx.out_dir.join("frontier.csv"))?;
            ctx.files.push("frontier.csv".into());
        }
        Command::Residual => {
            if cfg.setting != Setting::StochVol {
                return Err(AppError::Config(
                    "residual needs the stoch_vol setting".into(),
                ));
            }
            let eps = cfg
                .epsilons
                .as_ref()
                .ok_or_else(|| AppError::Config("missing `epsilons`".into()))?;
            let model = cfg.slow_vol_model()?;
            let nu0 = cfg.ou.as_ref().expect("validated").nu0;
            let study = residual_order_study(&model, eps, nu0, cfg.quantity, 2000, 250)?;
            let rep = ResidualReport {
                epsilons: study.epsilons,
                residuals: study.residuals,
                slope: study.slope,
            };
            ctx.emit("residual.csv", &residual_csv(&rep))?;
            residual = Some(rep);
        }
        Command::Lob => {
            if cfg.setting != Setting::Lob {
                return Err(AppError::Config("lob needs the lob setting".into()));
            }
            run_simulate(&mut ctx, &mut summary, &mut path_rows)?;
        }
    }

    if !summary.is_empty() {
        ctx.emit("summary.csv", &summary_csv(&summary))?;
    }
    if !path_rows.is_empty() {
        ctx.emit("paths.csv", &paths_csv(&path_rows))?;
    }

    let bundle = ReportBundle {
        metadata: RunMetadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.name().to_string(),
            seed: cfg.seed,
            unix_time: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config: cfg.clone(),
        },
        summary,
        frontier,
        residual,
        solve,
        paths: path_rows,
        files: ctx.files.clone(),
    };
    let json = serde_json::to_string_pretty(&bundle).expect("bundle serializes");
    write_file(&out_dir.join("report.json"), &json)?;
    Ok(bundle)
}

fn run_solve(ctx: &mut RunContext<'_>) -> Result<SolveReport, AppError> {
    let cfg = ctx.cfg;
    let points = cfg.curve_points.unwrap_or(TRAJECTORY_GRID);
    match cfg.setting {
        Setting::ConstantVol => {
            let n = cfg.venue_counts.as_ref().map(|v| v[0]);
            let venues = cfg.venue_set(n)?;
            let sol = ConstantVolSolution::new(
                venues,
                cfg.quantity,
                cfg.horizon,
                cfg.risk_aversion,
                cfg.terminal_penalty,
                cfg.sigma()?,
            )?;
            let curve = sol.trajectory(points);
            emit_trading_curve(&curve, &ctx.out_dir.join("curve.csv"))?;
            ctx.files.push("curve.csv".into());
            let mut coeffs = String::from("t,h\n");
            for k in 0..=points {
                let t = cfg.horizon * k as f64 / points as f64;
                let _ = writeln!(coeffs, "{},{}", fmt_full(t), fmt_full(sol.h(t)));
            }
            ctx.emit("coefficients.csv", &coeffs)?;
            Ok(SolveReport {
                h_start: sol.h(0.0),
                value_start: sol.value(0.0, cfg.quantity),
                condition_14: Some(sol.condition_14()),
                delta: Some(sol.delta()),
                terminal_inventory: Some(sol.inventory(cfg.horizon)),
                min_feasible_target: None,
            })
        }
        Setting::StochVol => {
            let model = cfg.slow_vol_model()?;
            let nu0 = cfg.ou.as_ref().expect("validated").nu0;
            let mut coeffs = String::from("t,h0,h1\n");
            for k in 0..=points {
                let t = cfg.horizon * k as f64 / points as f64;
                let _ = writeln!(
                    coeffs,
                    "{},{},{}",
                    fmt_full(t),
                    fmt_full(model.h0(t, nu0)),
                    fmt_full(model.h1(t, nu0)?)
                );
            }
            ctx.emit("coefficients.csv", &coeffs)?;
            Ok(SolveReport {
                h_start: model.h0(0.0, nu0),
                value_start: model.h0(0.0, nu0) * cfg.quantity * cfg.quantity,
                condition_14: None,
                delta: None,
                terminal_inventory: None,
                min_feasible_target: None,
            })
        }
        Setting::Lob => {
            let lob = cfg.lob_params()?;
            let coeffs = LobCoefficients::new(
                lob,
                cfg.eta_tem()?,
                cfg.eta_per()?,
                cfg.terminal_penalty,
                cfg.horizon,
                points.min(4000),
            )?;
            let mo = MoOnlySolution::new(
                cfg.eta_tem()?,
                cfg.eta_per()?,
                cfg.terminal_penalty,
                cfg.horizon,
                cfg.quantity,
            )?;
            let mut table = String::from("t,h,g,f\n");
            for (k, t) in coeffs.grid.iter().enumerate() {
                let _ = writeln!(
                    table,
                    "{},{},{},{}",
                    fmt_full(*t),
                    fmt_full(coeffs.h(*t)),
                    fmt_full(coeffs.g_grid[k]),
                    fmt_full(coeffs.f_grid[k])
                );
            }
            ctx.emit("coefficients.csv", &table)?;
            // market-order-only reference curve
            let mut curve = String::from("t,inventory,theta_1\n");
            for k in 0..=points {
                let t = cfg.horizon * k as f64 / points as f64;
                let x = mo.inventory(t);
                let _ = writeln!(
                    curve,
                    "{},{},{}",
                    fmt_full(t),
                    fmt_full(x),
                    fmt_full(mo.rate(t, x))
                );
            }
            ctx.emit("curve.csv", &curve)?;
            Ok(SolveReport {
                h_start: coeffs.h(0.0),
                value_start: coeffs.value(0.0, cfg.quantity)?,
                condition_14: None,
                delta: None,
                terminal_inventory: Some(mo.terminal_inventory()),
                min_feasible_target: Some(min_feasible_target(&coeffs, 4000)),
            })
        }
    }
}

fn run_simulate(
    ctx: &mut RunContext<'_>,
    summary: &mut Vec<SummaryRow>,
    path_rows: &mut Vec<PathRow>,
) -> Result<(), AppError> {
    let cfg = ctx.cfg;
    match cfg.setting {
        Setting::ConstantVol => {
            let counts: Vec<Option<usize>> = match &cfg.venue_counts {
                Some(ns) => ns.iter().map(|n| Some(*n)).collect(),
                None => vec![None],
            };
            for n in counts {
                let venues = cfg.venue_set(n)?;
                let label = n.map_or_else(|| venues.len().to_string(), |n| n.to_string());
                let sol = ConstantVolSolution::new(
                    venues,
                    cfg.quantity,
                    cfg.horizon,
                    cfg.risk_aversion,
                    cfg.terminal_penalty,
                    cfg.sigma()?,
                )?;
                let sim = ConstantVolSim {
                    solution: &sol,
                    initial_price: cfg.initial_price,
                    dt: cfg.dt,
                    shocks: cfg.shocks(),
                };
                let paths = run_ensemble(cfg.paths, cfg.seed, |_, streams| {
                    sim.run_path(streams, false)
                });
                summary.push(summarize(&label, &paths));
                collect_paths(path_rows, &label, &paths, cfg.emit_paths);
            }
        }
        Setting::StochVol => {
            let strategies = cfg.strategies.clone().unwrap_or_else(|| {
                vec![
                    StrategyKind::ConstantVol,
                    StrategyKind::MovingConstantVol,
                    StrategyKind::VolAdjusted,
                ]
            });
            let nu0 = cfg.ou.as_ref().expect("validated").nu0;
            for kind in strategies {
                let strat = match kind {
                    StrategyKind::ConstantVol => StochStrategy::Frozen,
                    StrategyKind::MovingConstantVol => StochStrategy::Moving,
                    StrategyKind::VolAdjusted => StochStrategy::Corrected,
                    other => {
                        return Err(AppError::Config(format!(
                            "strategy `{}` does not apply to the stoch_vol setting",
                            other.label()
                        )))
                    }
                };
                let sim = StochVolSim::new(
                    cfg.slow_vol_model()?,
                    nu0,
                    cfg.quantity,
                    cfg.initial_price,
                    cfg.dt,
                    cfg.shocks(),
                    strat,
                )?;
                let paths = run_ensemble(cfg.paths, cfg.seed, |_, streams| {
                    sim.run_path(streams, false)
                });
                summary.push(summarize(kind.label(), &paths));
                collect_paths(path_rows, kind.label(), &paths, cfg.emit_paths);
            }
        }
        Setting::Lob => {
            let strategies = cfg
                .strategies
                .clone()
                .unwrap_or_else(|| vec![StrategyKind::MoOnly, StrategyKind::MarketAndLimit]);
            for kind in strategies {
                let strategy = match kind {
                    StrategyKind::MoOnly => LobStrategy::MoOnly(MoOnlySolution::new(
                        cfg.eta_tem()?,
                        cfg.eta_per()?,
                        cfg.terminal_penalty,
                        cfg.horizon,
                        cfg.quantity,
                    )?),
                    StrategyKind::MarketAndLimit => {
                        LobStrategy::MarketAndLimit(LobCoefficients::new(
                            cfg.lob_params()?,
                            cfg.eta_tem()?,
                            cfg.eta_per()?,
                            cfg.terminal_penalty,
                            cfg.horizon,
                            64,
                        )?)
                    }
                    other => {
                        return Err(AppError::Config(format!(
                            "strategy `{}` does not apply to the lob setting",
                            other.label()
                        )))
                    }
                };
                let sim = LobSim::new(
                    strategy,
                    cfg.lob_params()?,
                    cfg.sigma()?,
                    cfg.quantity,
                    cfg.horizon,
                    cfg.terminal_penalty,
                    cfg.eta_tem()?,
                    cfg.eta_per()?,
                    cfg.risk_aversion,
                    cfg.initial_price,
                    cfg.dt,
                    cfg.shocks(),
                )?;
                let paths = run_ensemble(cfg.paths, cfg.seed, |_, streams| {
                    sim.run_path(streams, false)
                });
                summary.push(summarize(kind.label(), &paths));
                collect_paths(path_rows, kind.label(), &paths, cfg.emit_paths);
            }
        }
    }
    Ok(())
}

/// Two-decimal console rendering of the summary rows.
pub fn render_summary(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<22} {:>12} {:>12} {:>12} {:>12} {:>10} {:>10}",
        "variant", "mean G/L", "std G/L", "q_T", "objective", "skew", "kurt"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<22} {:>12.2} {:>12.2} {:>12.6} {:>12.2} {:>10} {:>10}",
            r.label,
            r.mean_gl,
            r.std_gl,
            r.mean_q_t,
            r.mean_objective,
            r.skewness.map_or_else(|| "-".into(), |s| format!("{s:.2}")),
            r.kurtosis.map_or_else(|| "-".into(), |k| format!("{k:.2}")),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> ScenarioConfig {
        serde_json::from_str(
            r#"{
            "setting": "constant_vol",
            "quantity": 100.0, "horizon": 1.0, "risk_aversion": 0.1,
            "terminal_penalty": 0.1, "initial_price": 15.0,
            "dt": 0.001, "paths": 50, "seed": 7,
            "sigma": 2.718281828459045,
            "eta_per": 0.005,
            "venues": [{"beta": 1.0, "eta_tem": 0.01}]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn config_roundtrip_and_validation() {
        let cfg = base_config();
        assert!(cfg.validate().is_ok());
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert!(back.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v: serde_json::Value = serde_json::to_value(base_config()).unwrap();
        v["mystery"] = serde_json::json!(1);
        let parsed: Result<ScenarioConfig, _> = serde_json::from_value(v);
        assert!(parsed.is_err());
    }

    #[test]
    fn negative_impact_fails_validation() {
        let mut cfg = base_config();
        cfg.venues = Some(vec![VenueConfig {
            beta: 1.0,
            eta_tem: -0.01,
        }]);
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn misaligned_dt_fails_validation() {
        let mut cfg = base_config();
        cfg.dt = 0.0003;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn simulate_writes_summary_and_report() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = base_config();
        let bundle = run_scenario(Command::Simulate, &cfg, dir.path()).unwrap();
        assert_eq!(bundle.summary.len(), 1);
        assert!(dir.path().join("summary.csv").exists());
        assert!(dir.path().join("report.json").exists());

        // cross-format consistency: JSON mirrors the CSV values
        let csv = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        let line = csv.lines().nth(1).unwrap();
        let cells: Vec<&str> = line.split(',').collect();
        let mean: f64 = cells[2].parse().unwrap();
        assert_eq!(mean.to_bits(), bundle.summary[0].mean_gl.to_bits());
        let json: ReportBundle =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        assert_eq!(
            json.summary[0].mean_gl.to_bits(),
            bundle.summary[0].mean_gl.to_bits()
        );
    }

    #[test]
    fn rerun_is_numerically_identical() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let cfg = base_config();
        run_scenario(Command::Simulate, &cfg, dir1.path()).unwrap();
        run_scenario(Command::Simulate, &cfg, dir2.path()).unwrap();
        let a = fs::read_to_string(dir1.path().join("summary.csv")).unwrap();
        let b = fs::read_to_string(dir2.path().join("summary.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn solve_emits_monotone_curve() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config();
        cfg.curve_points = Some(500);
        let bundle = run_scenario(Command::Solve, &cfg, dir.path()).unwrap();
        assert!(bundle.solve.is_some());
        let csv = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,inventory,theta_1");
        let mut prev = f64::INFINITY;
        let mut first: Option<(f64, f64)> = None;
        for line in lines {
            let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            if first.is_none() {
                first = Some((cells[0], cells[1]));
            }
            assert!(cells[1] <= prev);
            prev = cells[1];
        }
        let (t0, x0) = first.unwrap();
        assert_eq!(t0, 0.0);
        assert_eq!(x0, 100.0);
    }

    #[test]
    fn more_venues_liquidate_faster_everywhere() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config();
        cfg.venues = None;
        cfg.eta_tem = Some(0.01);
        cfg.curve_points = Some(200);
        let mut curves = Vec::new();
        for n in [1usize, 2, 10] {
            cfg.venue_counts = Some(vec![n]);
            run_scenario(Command::Solve, &cfg, dir.path()).unwrap();
            let csv = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
            let xs: Vec<f64> = csv
                .lines()
                .skip(1)
                .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
                .collect();
            curves.push(xs);
        }
        let interior = 1..curves[0].len() - 1;
        for ((one, two), ten) in curves[0][interior.clone()]
            .iter()
            .zip(&curves[1][interior.clone()])
            .zip(&curves[2][interior])
        {
            assert!(two < one && ten < two);
        }
    }

    #[test]
    fn frontier_command_emits_sorted_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config();
        cfg.paths = 60;
        cfg.lambda_grid = Some(vec![0.0, 0.1, 0.3]);
        let bundle = run_scenario(Command::Frontier, &cfg, dir.path()).unwrap();
        assert_eq!(bundle.frontier.len(), 3);
        let csv = fs::read_to_string(dir.path().join("frontier.csv")).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("lambda,std_gl,mean_gl\n"));
        let first: f64 = csv
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(first, 0.0);
    }
}
