//! Small numerical utilities: quadrature, tridiagonal solves, regression.

use crate::error::SolverError;

/// Composite Simpson rule with `n_sub` subintervals (each gets one midpoint).
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n_sub: usize) -> f64 {
    assert!(n_sub > 0);
    if a == b {
        return 0.0;
    }
    let h = (b - a) / n_sub as f64;
    let mut acc = 0.0;
    for i in 0..n_sub {
        let lo = a + i as f64 * h;
        let hi = lo + h;
        let mid = 0.5 * (lo + hi);
        acc += (f(lo) + 4.0 * f(mid) + f(hi)) * (h / 6.0);
    }
    acc
}

/// Simpson with subinterval doubling until the result moves by less than
/// `rel_tol` relatively, starting from `base_n` subintervals.
pub fn simpson_converged<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    base_n: usize,
    rel_tol: f64,
    max_n: usize,
) -> Result<f64, SolverError> {
    let mut n = base_n.max(1);
    let mut prev = simpson(f, a, b, n);
    while n < max_n {
        n *= 2;
        let next = simpson(f, a, b, n);
        let scale = next.abs().max(1e-12);
        if (next - prev).abs() <= rel_tol * scale {
            return Ok(next);
        }
        prev = next;
    }
    Err(SolverError::QuadratureNotConverged {
        max_subintervals: max_n,
    })
}

/// Cumulative trapezoid of samples `y` on a uniform grid with spacing `h`.
/// Returns a vector of the same length starting at 0.
pub fn cumulative_trapezoid(y: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in y.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * h;
        out.push(acc);
    }
    out
}

/// Solves a tridiagonal system in place via the Thomas algorithm.
/// `sub[0]` and `sup[n-1]` are ignored. Panics on zero pivots.
pub fn solve_tridiagonal(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &mut [f64],
    scratch: &mut Vec<f64>,
) {
    let n = diag.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        scratch[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * scratch[i];
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
}

/// Least-squares slope of y against x.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}
