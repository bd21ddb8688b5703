//! Finite-difference oracle for the full value-function coefficient
//! `h(t, nu)` under the slow volatility factor.
//!
//! Marching backward from `h(T, .) = -K`, each step applies Strang
//! splitting: half a step of the pointwise Riccati source (done exactly via
//! its closed-form flow), one Crank-Nicolson step of the slow generator
//! `epsilon ((m - nu) d_nu + xi^2/2 d_nunu)`, then the second source half.
//! The factor domain is truncated at several standard deviations of the
//! diffusion actually reachable over the horizon, with zero-curvature
//! boundaries. The exact source substep makes the scheme degenerate to the
//! analytic solution when `epsilon = 0`.

use crate::error::SolverError;
use crate::numerics::solve_tridiagonal;
use crate::stochvol::SlowVolModel;

/// Backward-in-time grid solution of the `h` equation.
#[derive(Debug, Clone)]
pub struct PdeGridSolution {
    pub t_grid: Vec<f64>,
    pub nu_grid: Vec<f64>,
    /// Row-major `[t_index * nu_len + nu_index]`, `t_grid` ascending.
    values: Vec<f64>,
    /// Index of the grid node sitting at the requested factor level.
    pub center_index: usize,
}

impl PdeGridSolution {
    pub fn value(&self, t_index: usize, nu_index: usize) -> f64 {
        self.values[t_index * self.nu_grid.len() + nu_index]
    }

    pub fn slice(&self, t_index: usize) -> &[f64] {
        let n = self.nu_grid.len();
        &self.values[t_index * n..(t_index + 1) * n]
    }

    /// `h(0, nu_center)`.
    pub fn at_start(&self) -> f64 {
        self.value(0, self.center_index)
    }
}

/// Width multiplier: the domain extends this many standard deviations of
/// the reachable factor distribution either side of the start value.
const DOMAIN_STDS: f64 = 5.0;

/// Scheme guard: the solution must stay within this multiple of the
/// terminal data scale.
fn stability_bound(model: &SlowVolModel) -> f64 {
    10.0 * (model.terminal_penalty + model.eta_per)
}

/// Factor-domain half-width covering the diffusion over one horizon.
pub fn domain_half_width(model: &SlowVolModel, nu_center: f64) -> f64 {
    let ou = &model.ou;
    let spread = ou.xi * (ou.epsilon * model.horizon).sqrt();
    DOMAIN_STDS * spread + ou.epsilon * (ou.mean - nu_center).abs() * model.horizon + 1e-3
}

/// Solves the backward semilinear equation for `h` on a uniform grid with
/// `t_steps` time steps and `2 * half_points + 1` factor nodes centered at
/// `nu_center`.
pub fn solve_h_pde(
    model: &SlowVolModel,
    nu_center: f64,
    t_steps: usize,
    half_points: usize,
) -> Result<PdeGridSolution, SolverError> {
    if t_steps == 0 || half_points == 0 {
        return Err(SolverError::Invalid(
            "pde grid must have positive resolution".into(),
        ));
    }
    let n_nu = 2 * half_points + 1;
    let width = domain_half_width(model, nu_center);
    let d_nu = width / half_points as f64;
    let nu_grid: Vec<f64> = (0..n_nu)
        .map(|i| nu_center + (i as f64 - half_points as f64) * d_nu)
        .collect();
    let dt = model.horizon / t_steps as f64;
    let t_grid: Vec<f64> = (0..=t_steps)
        .map(|k| {
            if k == t_steps {
                model.horizon
            } else {
                k as f64 * dt
            }
        })
        .collect();

    // Crank-Nicolson matrices for epsilon * L0 with zero-curvature
    // boundaries (one-sided drift, no diffusion curvature at the edge).
    let theta = 0.5 * model.ou.epsilon * dt;
    let xi2h = 0.5 * model.ou.xi * model.ou.xi;
    let mut sub = vec![0.0; n_nu];
    let mut diag = vec![0.0; n_nu];
    let mut sup = vec![0.0; n_nu];
    // row-form of L0: l_sub, l_diag, l_sup
    let mut l_sub = vec![0.0; n_nu];
    let mut l_diag = vec![0.0; n_nu];
    let mut l_sup = vec![0.0; n_nu];
    for i in 0..n_nu {
        let drift = model.ou.mean - nu_grid[i];
        if i == 0 {
            l_diag[i] = -drift / d_nu;
            l_sup[i] = drift / d_nu;
        } else if i == n_nu - 1 {
            l_sub[i] = -drift / d_nu;
            l_diag[i] = drift / d_nu;
        } else {
            l_sub[i] = -drift / (2.0 * d_nu) + xi2h / (d_nu * d_nu);
            l_diag[i] = -2.0 * xi2h / (d_nu * d_nu);
            l_sup[i] = drift / (2.0 * d_nu) + xi2h / (d_nu * d_nu);
        }
        sub[i] = -theta * l_sub[i];
        diag[i] = 1.0 - theta * l_diag[i];
        sup[i] = -theta * l_sup[i];
    }

    let a = 1.0 / model.eta_tem;
    let b2a = 0.5 * model.eta_per;
    let deltas: Vec<f64> = nu_grid
        .iter()
        .map(|&nu| {
            let s = model.vol_map.eval(nu);
            model.risk_aversion * s * s
        })
        .collect();

    let bound = stability_bound(model);
    let mut values = vec![0.0; (t_steps + 1) * n_nu];
    let mut h: Vec<f64> = vec![-model.terminal_penalty; n_nu];
    values[t_steps * n_nu..].copy_from_slice(&h);

    let mut rhs = vec![0.0; n_nu];
    let mut scratch = Vec::new();
    for step in (0..t_steps).rev() {
        source_half_step(&mut h, &deltas, a, b2a, 0.5 * dt);
        if model.ou.epsilon > 0.0 {
            for i in 0..n_nu {
                let lo = if i > 0 { l_sub[i] * h[i - 1] } else { 0.0 };
                let hi = if i + 1 < n_nu {
                    l_sup[i] * h[i + 1]
                } else {
                    0.0
                };
                rhs[i] = h[i] + theta * (lo + l_diag[i] * h[i] + hi);
            }
            solve_tridiagonal(&sub, &diag, &sup, &mut rhs, &mut scratch);
            h.copy_from_slice(&rhs);
        }
        source_half_step(&mut h, &deltas, a, b2a, 0.5 * dt);

        let max_abs = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !max_abs.is_finite() || max_abs > bound {
            return Err(SolverError::UnstableScheme { max_abs, bound });
        }
        values[step * n_nu..(step + 1) * n_nu].copy_from_slice(&h);
    }

    Ok(PdeGridSolution {
        t_grid,
        nu_grid,
        values,
        center_index: half_points,
    })
}

/// Exact backward flow of `dv/dtau = -Delta + a v^2` for duration `s`,
/// applied pointwise to `h = v - eta_per/2` (negative `v` throughout).
fn source_half_step(h: &mut [f64], deltas: &[f64], a: f64, b2a: f64, s: f64) {
    for (hi, &delta) in h.iter_mut().zip(deltas) {
        let v0 = *hi + b2a;
        let v1 = if a * delta * s * s < 1e-16 {
            // Degenerate flow; relative error below 3e-17 in this regime.
            v0 / (1.0 - a * v0 * s)
        } else {
            let sad = (a * delta).sqrt();
            let w0 = v0 * (a / delta).sqrt();
            let varsigma = (1.0 + w0) / (1.0 - w0);
            let e = (-2.0 * sad * s).exp();
            (delta / a).sqrt() * (varsigma * e - 1.0) / (varsigma * e + 1.0)
        };
        *hi = v1 - b2a;
    }
}

/// Outcome of the accuracy study comparing the grid solution of `h` with
/// the two-term expansion across a sweep of `epsilon` values.
#[derive(Debug, Clone)]
pub struct ResidualStudy {
    pub epsilons: Vec<f64>,
    /// |theta(grid truth) - theta(expansion)| at the probe state.
    pub residuals: Vec<f64>,
    /// Least-squares slope of log residual against log epsilon.
    pub slope: f64,
}

/// Measures the rate-approximation error of the expansion-based policy at
/// `(t = 0, nu_center, q)` for each `epsilon`, taking the grid solution as
/// the truth, and fits the decay order.
pub fn residual_order_study(
    model: &SlowVolModel,
    epsilons: &[f64],
    nu_center: f64,
    q: f64,
    t_steps: usize,
    half_points: usize,
) -> Result<ResidualStudy, SolverError> {
    if epsilons.len() < 3 {
        return Err(SolverError::Invalid(
            "need at least three epsilon values".into(),
        ));
    }
    let mut residuals = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut m = model.clone();
        m.ou.epsilon = eps;
        let grid = solve_h_pde(&m, nu_center, t_steps, half_points)?;
        let h_truth = grid.at_start();
        let theta_truth = -(2.0 * h_truth + m.eta_per) / (2.0 * m.eta_tem) * q;
        let theta_expansion = m.theta_corrected(0.0, nu_center, q)?;
        residuals.push((theta_truth - theta_expansion).abs());
    }
    let logs_eps: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
    let logs_res: Vec<f64> = residuals
        .iter()
        .map(|r| r.max(f64::MIN_POSITIVE).ln())
        .collect();
    let slope = crate::numerics::regression_slope(&logs_eps, &logs_res);
    Ok(ResidualStudy {
        epsilons: epsilons.to_vec(),
        residuals,
        slope,
    })
}
