//! Acceptance suite: every release gate in one place.
//!
//! Each test prints one `ACCEPTANCE <n> <name>: PASS/FAIL` line (run with
//! `--nocapture` to see them) and asserts the stated thresholds. Three
//! checks pin reference figures that the model dynamics cannot reproduce;
//! their failure messages carry the measured values.

use std::time::Instant;

use liquidator::constvol::{equal_venue_rate_coefficient, h_ode_oracle, ConstantVolSolution};
use liquidator::lob::{LobCoefficients, LobParams, MoOnlySolution};
use liquidator::market::{check_admissibility, VenueSet};
use liquidator::pde::{residual_order_study, solve_h_pde};
use liquidator::rng::Stream;
use liquidator::sim::{
    run_ensemble, ConstantVolSim, EnsembleStats, LobSim, LobStrategy, ShockKind, StochStrategy,
    StochVolSim,
};
use liquidator::stochvol::{OuParams, SlowVolModel, VolMap};

const SIGMA: f64 = std::f64::consts::E;
const ETA_TEM: f64 = 0.01;
const ETA_PER: f64 = 0.005;
const PENALTY: f64 = 0.1;
const QUANTITY: f64 = 100.0;
const HORIZON: f64 = 1.0;
const PRICE: f64 = 15.0;

fn verdict(n: u32, name: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("ACCEPTANCE {n:02} {name}: PASS");
    } else {
        println!("ACCEPTANCE {n:02} {name}: FAIL — {}", failures.join("; "));
    }
    assert!(
        failures.is_empty(),
        "criterion {n} ({name}): {}",
        failures.join("; ")
    );
}

fn check(failures: &mut Vec<String>, ok: bool, msg: String) {
    if !ok {
        failures.push(msg);
    }
}

fn uniform(rng: &mut Stream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform()
}

fn random_venues(rng: &mut Stream, n: usize, eta_lo: f64, eta_hi: f64) -> VenueSet {
    let mut raw: Vec<(f64, f64)> = (0..n)
        .map(|_| (uniform(rng, 0.15, 1.0), uniform(rng, eta_lo, eta_hi)))
        .collect();
    let total: f64 = raw.iter().map(|v| v.0).sum();
    for v in &mut raw {
        v.0 /= total;
    }
    let s: f64 = raw.iter().map(|v| v.0).sum();
    raw[0].0 += 1.0 - s;
    VenueSet::new(&raw, uniform(rng, 0.0, 0.01)).unwrap()
}

#[test]
fn criterion_01_closed_form_vs_ode_oracle() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rng = Stream::new(101);
    let grid: Vec<f64> = (0..=60).map(|k| k as f64 * HORIZON / 60.0).collect();
    let mut hyperbolic = 0;
    let mut trigonometric = 0;
    let mut max_err = 0.0f64;
    let mut produced = 0;
    while produced < 100 {
        // even draws probe the hyperbolic branch, odd draws the tangent one
        let want_trig = produced % 2 == 1;
        let (venues, lambda) = if want_trig {
            (
                random_venues(&mut rng, 2 + (produced % 2), 0.004, 0.03),
                0.0,
            )
        } else {
            (
                random_venues(&mut rng, 1 + produced % 4, 0.004, 0.03),
                uniform(&mut rng, 0.01, 0.5),
            )
        };
        let sol = match ConstantVolSolution::new(
            venues,
            QUANTITY,
            HORIZON,
            lambda,
            uniform(&mut rng, 0.05, 0.4),
            uniform(&mut rng, 0.5, 3.0),
        ) {
            Ok(s) => s,
            Err(_) => continue, // singular draw; resample
        };
        if want_trig && sol.delta() >= 0.0 {
            continue;
        }
        match sol.branch() {
            liquidator::constvol::Branch::Hyperbolic => hyperbolic += 1,
            liquidator::constvol::Branch::Trigonometric => trigonometric += 1,
        }
        let oracle = h_ode_oracle(&sol, &grid, 300).unwrap();
        for (k, t) in grid.iter().enumerate() {
            max_err = max_err.max((sol.h(*t) - oracle[k]).abs());
        }
        produced += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(
        &mut failures,
        hyperbolic >= 20 && trigonometric >= 20,
        format!(
            "want both branches exercised, got {hyperbolic} hyperbolic / {trigonometric} tangent"
        ),
    );
    check(
        &mut failures,
        max_err <= 1e-8,
        format!("max |h - oracle| = {max_err:.3e} > 1e-8"),
    );
    check(
        &mut failures,
        elapsed < 10.0,
        format!("runtime {elapsed:.1}s >= 10s"),
    );
    verdict(1, "closed form vs ODE oracle", &failures);
}

#[test]
fn criterion_02_terminal_conditions() {
    let mut failures = Vec::new();
    let tol = 1e-14;

    // constant volatility, both branches
    let single = VenueSet::new(&[(1.0, ETA_TEM)], ETA_PER).unwrap();
    let hyp = ConstantVolSolution::new(single, QUANTITY, HORIZON, 0.1, PENALTY, SIGMA).unwrap();
    check(
        &mut failures,
        (hyp.h(HORIZON) + PENALTY).abs() <= tol,
        format!("constant-vol hyperbolic h(T) = {}", hyp.h(HORIZON)),
    );
    let uneven = VenueSet::new(&[(0.8, ETA_TEM), (0.2, ETA_TEM)], ETA_PER).unwrap();
    let trig = ConstantVolSolution::new(uneven, QUANTITY, HORIZON, 0.0, PENALTY, 1.0).unwrap();
    check(
        &mut failures,
        (trig.h(HORIZON) + PENALTY).abs() <= tol,
        format!("constant-vol tangent h(T) = {}", trig.h(HORIZON)),
    );

    // stochastic volatility: h0(T, nu) = -K, h1(T, nu) = 0 for sampled nu
    let model = SlowVolModel::new(
        OuParams {
            mean: 1.0,
            epsilon: 0.01,
            xi: 2.0,
            rho: -0.4,
        },
        VolMap::Exp,
        ETA_TEM,
        ETA_PER,
        0.1,
        PENALTY,
        HORIZON,
    )
    .unwrap();
    for nu in [-1.0, 0.0, 0.5, 1.5] {
        check(
            &mut failures,
            (model.h0(HORIZON, nu) + PENALTY).abs() <= tol,
            format!("slow-vol h0(T, {nu}) = {}", model.h0(HORIZON, nu)),
        );
        let h1 = model.h1(HORIZON, nu).unwrap();
        check(
            &mut failures,
            h1.abs() <= tol,
            format!("slow-vol h1(T, {nu}) = {h1}"),
        );
    }

    // order book: (h, g, f)(T) = (-K, 0, 0)
    let lob = LobParams {
        lambda_m: 100.0,
        spread: 0.3,
        eta_up: 0.02,
        eta_down: 0.02,
        eta_jump: 0.02,
    };
    let coeffs = LobCoefficients::new(lob, ETA_TEM, ETA_PER, PENALTY, HORIZON, 16).unwrap();
    check(
        &mut failures,
        (coeffs.h(HORIZON) + PENALTY).abs() <= tol,
        format!("lob h(T) = {}", coeffs.h(HORIZON)),
    );
    check(
        &mut failures,
        coeffs.g(HORIZON).abs() <= tol,
        format!("lob g(T) = {}", coeffs.g(HORIZON)),
    );
    let f_t = coeffs.f(HORIZON).unwrap();
    check(&mut failures, f_t.abs() <= tol, format!("lob f(T) = {f_t}"));
    verdict(2, "terminal conditions", &failures);
}

#[test]
fn criterion_03_multi_venue_table() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let counts = [1usize, 2, 3, 4, 10, 50];
    let mut means = Vec::new();
    let mut q_ts = Vec::new();
    let mut objectives = Vec::new();
    for n in counts {
        let venues = VenueSet::equal(n, ETA_TEM, ETA_PER).unwrap();
        let sol = ConstantVolSolution::new(venues, QUANTITY, HORIZON, 0.1, PENALTY, SIGMA).unwrap();
        let sim = ConstantVolSim {
            solution: &sol,
            initial_price: PRICE,
            dt: 1e-3,
            shocks: ShockKind::Binomial,
        };
        let paths = run_ensemble(1000, 7, |_, s| sim.run_path(s, false));
        let stats = EnsembleStats::from_paths(&paths);
        means.push(stats.mean);
        q_ts.push(stats.mean_final_inventory);
        objectives.push(stats.mean_objective);
    }
    let within = |value: f64, target: f64, frac: f64| (value - target).abs() <= frac * target.abs();
    check(
        &mut failures,
        within(means[0], -461.80, 0.06),
        format!("mean G/L N=1: {:.2} vs -461.80 +-6%", means[0]),
    );
    check(
        &mut failures,
        within(means[1], -324.86, 0.06),
        format!("mean G/L N=2: {:.2} vs -324.86 +-6%", means[1]),
    );
    check(
        &mut failures,
        within(objectives[0], -902.90, 0.06),
        format!("mean objective N=1: {:.2} vs -902.90 +-6%", objectives[0]),
    );
    check(
        &mut failures,
        within(objectives[1], -638.30, 0.06),
        format!("mean objective N=2: {:.2} vs -638.30 +-6%", objectives[1]),
    );
    for (i, n) in counts.iter().enumerate().skip(2) {
        check(
            &mut failures,
            q_ts[i] < 1e-6,
            format!("q_T(N={n}) = {:.3e} >= 1e-6", q_ts[i]),
        );
    }
    for w in means.windows(2) {
        check(
            &mut failures,
            w[1] > w[0],
            format!(
                "mean G/L not strictly improving: {:.2} -> {:.2}",
                w[0], w[1]
            ),
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(
        &mut failures,
        elapsed < 120.0,
        format!("runtime {elapsed:.1}s >= 120s"),
    );
    verdict(3, "multi-venue table reproduction", &failures);
}

#[test]
fn criterion_04_venue_split_cost_identity() {
    let mut failures = Vec::new();
    let venues = VenueSet::new(&[(1.0, ETA_TEM)], ETA_PER).unwrap();
    let sol = ConstantVolSolution::new(venues, QUANTITY, HORIZON, 0.1, PENALTY, SIGMA).unwrap();
    let curve = sol.trajectory(500);
    let dt = HORIZON / 500.0;
    let single_cost: f64 = curve.rates.iter().map(|r| ETA_TEM * r[0] * r[0] * dt).sum();
    for n in [2usize, 3, 5, 8] {
        let split_cost: f64 = curve
            .rates
            .iter()
            .map(|r| {
                let per_venue = r[0] / n as f64;
                n as f64 * ETA_TEM * per_venue * per_venue * dt
            })
            .sum();
        let err = (split_cost - single_cost / n as f64).abs();
        check(
            &mut failures,
            err <= 1e-12 * single_cost.max(1.0),
            format!("N={n}: |split - single/N| = {err:.3e}"),
        );
    }
    verdict(4, "venue-splitting cost identity", &failures);
}

#[test]
fn criterion_05_many_venue_rate_limit() {
    let mut failures = Vec::new();
    let limit = (0.1 * SIGMA * SIGMA / ETA_TEM).sqrt();
    for frac in [0.25, 0.5, 0.75] {
        let t = frac * HORIZON;
        let j =
            equal_venue_rate_coefficient(t, 10_000, 0.1, SIGMA, ETA_TEM, ETA_PER, PENALTY, HORIZON)
                .unwrap();
        let scaled = (10_000.0f64).sqrt() * j;
        let rel = (scaled / limit - 1.0).abs();
        check(
            &mut failures,
            rel <= 0.01,
            format!("t = {t}: sqrt(N) J = {scaled:.5} vs {limit:.5} (rel {rel:.2e})"),
        );
    }
    verdict(5, "many-venue rate limit", &failures);
}

#[test]
fn criterion_06_stochastic_vol_table() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let model = SlowVolModel::new(
        OuParams {
            mean: 1.0,
            epsilon: 0.01,
            xi: 2.0,
            rho: -0.4,
        },
        VolMap::Exp,
        ETA_TEM,
        ETA_PER,
        0.1,
        PENALTY,
        HORIZON,
    )
    .unwrap();
    // dt below the reporting default so the first-order correction's
    // systematic effect is not drowned by step bias
    let dt = 1e-4;
    let mut stats = Vec::new();
    for strat in [
        StochStrategy::Frozen,
        StochStrategy::Moving,
        StochStrategy::Corrected,
    ] {
        let sim = StochVolSim::new(
            model.clone(),
            0.5,
            QUANTITY,
            PRICE,
            dt,
            ShockKind::Binomial,
            strat,
        )
        .unwrap();
        let paths = run_ensemble(1000, 1, |_, s| sim.run_path(s, false));
        stats.push(EnsembleStats::from_paths(&paths));
    }
    let (frozen, moving, corrected) = (&stats[0], &stats[1], &stats[2]);

    check(
        &mut failures,
        frozen.mean_objective < moving.mean_objective
            && moving.mean_objective < corrected.mean_objective,
        format!(
            "objective ordering violated: {:.4} / {:.4} / {:.4}",
            frozen.mean_objective, moving.mean_objective, corrected.mean_objective
        ),
    );
    let ratio = 2.0 * frozen.std / (moving.std + corrected.std);
    check(
        &mut failures,
        (1.5..=2.5).contains(&ratio),
        format!("frozen/others std ratio {ratio:.2} outside [1.5, 2.5]"),
    );
    let f_skew = frozen.skewness.unwrap();
    let f_kurt = frozen.kurtosis.unwrap();
    check(
        &mut failures,
        f_skew > 0.5,
        format!("frozen skew {f_skew:.3} <= 0.5"),
    );
    check(
        &mut failures,
        f_kurt > 4.0,
        format!("frozen kurtosis {f_kurt:.3} <= 4"),
    );
    for (label, s) in [("moving", moving), ("corrected", corrected)] {
        let skew = s.skewness.unwrap();
        let kurt = s.kurtosis.unwrap();
        check(
            &mut failures,
            (-0.2..=0.5).contains(&skew),
            format!("{label} skew {skew:.3} outside [-0.2, 0.5]"),
        );
        check(
            &mut failures,
            (2.5..=3.6).contains(&kurt),
            format!("{label} kurtosis {kurt:.3} outside [2.5, 3.6]"),
        );
    }
    for (s, target) in stats.iter().zip([-300.70, -294.50, -288.46]) {
        check(
            &mut failures,
            (s.mean - target).abs() <= 0.08 * target.abs(),
            format!("mean {:.2} vs {target} +-8%", s.mean),
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(
        &mut failures,
        elapsed < 300.0,
        format!("runtime {elapsed:.1}s >= 300s"),
    );
    verdict(6, "stochastic-vol table reproduction", &failures);
}

#[test]
fn criterion_07_expansion_order_and_pde_convergence() {
    let mut failures = Vec::new();
    let model = SlowVolModel::new(
        OuParams {
            mean: 1.0,
            epsilon: 0.01,
            xi: 2.0,
            rho: -0.4,
        },
        VolMap::Exp,
        ETA_TEM,
        ETA_PER,
        0.1,
        PENALTY,
        HORIZON,
    )
    .unwrap();
    let study =
        residual_order_study(&model, &[0.04, 0.02, 0.01], 0.5, QUANTITY, 2000, 250).unwrap();
    check(
        &mut failures,
        (1.7..=2.3).contains(&study.slope),
        format!(
            "residual slope {:.3} outside [1.7, 2.3] (residuals {:?})",
            study.slope, study.residuals
        ),
    );

    let mut m = model.clone();
    m.ou.epsilon = 0.04;
    let coarse = solve_h_pde(&m, 0.5, 400, 15).unwrap().at_start();
    let medium = solve_h_pde(&m, 0.5, 400, 30).unwrap().at_start();
    let fine = solve_h_pde(&m, 0.5, 400, 60).unwrap().at_start();
    let ratio = (coarse - medium).abs() / (medium - fine).abs();
    check(
        &mut failures,
        (3.0..=5.0).contains(&ratio),
        format!("spatial halving error ratio {ratio:.2} outside [3, 5]"),
    );
    verdict(7, "expansion order and grid convergence", &failures);
}

#[test]
fn criterion_08_lob_closed_forms() {
    let mut failures = Vec::new();
    let mo = MoOnlySolution::new(ETA_TEM, ETA_PER, PENALTY, HORIZON, QUANTITY).unwrap();
    // 4.8780 to four decimals; the full-precision target is 100/20.5
    let x_t = mo.terminal_inventory();
    check(
        &mut failures,
        (x_t - 100.0 / 20.5).abs() <= 1e-6,
        format!("terminal inventory {x_t:.7} vs {:.7}", 100.0 / 20.5),
    );

    // sigma = 0 simulation of the market-order strategy at dt = 1e-4
    let quiet = LobParams {
        lambda_m: 0.0,
        spread: 0.0,
        eta_up: 0.0,
        eta_down: 0.0,
        eta_jump: 0.0,
    };
    let sim = LobSim::new(
        LobStrategy::MoOnly(mo),
        quiet,
        0.0,
        QUANTITY,
        HORIZON,
        PENALTY,
        ETA_TEM,
        ETA_PER,
        0.0,
        PRICE,
        1e-4,
        ShockKind::Binomial,
    )
    .unwrap();
    let mut streams = liquidator::rng::PathStreams::new(1, 0);
    let path = sim.run_path(&mut streams, false);
    let rel = (path.final_inventory - x_t).abs() / x_t;
    check(
        &mut failures,
        rel <= 1e-3,
        format!(
            "simulated terminal inventory {:.6} vs {x_t:.6} (rel {rel:.2e})",
            path.final_inventory
        ),
    );
    verdict(8, "order-book closed forms", &failures);
}

#[test]
fn criterion_09_limit_orders_slow_the_market_flow() {
    let mut failures = Vec::new();
    let lob = LobParams {
        lambda_m: 100.0,
        spread: 0.3,
        eta_up: 0.02,
        eta_down: 0.02,
        eta_jump: 0.02,
    };
    let coeffs = LobCoefficients::new(lob, ETA_TEM, ETA_PER, PENALTY, HORIZON, 32).unwrap();
    let mo = MoOnlySolution::new(ETA_TEM, ETA_PER, PENALTY, HORIZON, QUANTITY).unwrap();
    let mut worst = f64::INFINITY;
    for ti in 0..20 {
        let t = ti as f64 * HORIZON / 20.0;
        for q in [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0] {
            let gap = mo.rate(t, q) - liquidator::lob::theta_ml(t, q, &coeffs);
            worst = worst.min(gap);
        }
    }
    check(
        &mut failures,
        worst > 0.0,
        format!("min(theta_mo - theta_ml) = {worst:.3e} <= 0"),
    );
    verdict(9, "combined strategy trades slower", &failures);
}

#[test]
fn criterion_10_lob_experiment() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let lob = LobParams {
        lambda_m: 100.0,
        spread: 0.3,
        eta_up: 0.02,
        eta_down: 0.02,
        eta_jump: 0.02,
    };
    let run = |strategy: LobStrategy| {
        let sim = LobSim::new(
            strategy,
            lob,
            SIGMA,
            QUANTITY,
            HORIZON,
            PENALTY,
            ETA_TEM,
            ETA_PER,
            0.1,
            PRICE,
            1e-4,
            ShockKind::Binomial,
        )
        .unwrap();
        let paths = run_ensemble(1000, 7, |_, s| sim.run_path(s, false));
        EnsembleStats::from_paths(&paths)
    };
    let mo = run(LobStrategy::MoOnly(
        MoOnlySolution::new(ETA_TEM, ETA_PER, PENALTY, HORIZON, QUANTITY).unwrap(),
    ));
    let ml = run(LobStrategy::MarketAndLimit(
        LobCoefficients::new(lob, ETA_TEM, ETA_PER, PENALTY, HORIZON, 32).unwrap(),
    ));
    check(
        &mut failures,
        ml.mean > 0.0,
        format!("combined mean {:.2} not positive", ml.mean),
    );
    check(
        &mut failures,
        mo.mean < 0.0,
        format!("market-only mean {:.2} not negative", mo.mean),
    );
    let gap = ml.mean - mo.mean;
    let target_gap = 294.9 - (-371.3);
    check(
        &mut failures,
        gap >= 600.0 && (gap - target_gap).abs() <= 0.15 * target_gap,
        format!("gap {gap:.1} outside [600, {:.1}]", target_gap * 1.15),
    );
    let elapsed = start.elapsed().as_secs_f64();
    check(
        &mut failures,
        elapsed < 180.0,
        format!("runtime {elapsed:.1}s >= 180s"),
    );
    verdict(10, "order-book experiment reproduction", &failures);
}

#[test]
fn criterion_11_byte_identical_reports_across_thread_counts() {
    let mut failures = Vec::new();
    let exe = env!("CARGO_BIN_EXE_liquidator");
    let dir = std::env::temp_dir().join(format!("liq-acc11-{}", std::process::id()));
    let config = dir.join("scenario.json");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(
        &config,
        r#"{
            "setting": "constant_vol",
            "quantity": 100.0, "horizon": 1.0, "risk_aversion": 0.1,
            "terminal_penalty": 0.1, "initial_price": 15.0,
            "dt": 0.001, "paths": 200, "seed": 42,
            "sigma": 2.718281828459045, "eta_per": 0.005, "eta_tem": 0.01,
            "venue_counts": [1, 2, 4],
            "emit_paths": true
        }"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.join(format!("out-{threads}"));
        let status = std::process::Command::new(exe)
            .args(["simulate", "--config"])
            .arg(&config)
            .arg("--out-dir")
            .arg(&out)
            .env("LIQUIDATOR_THREADS", threads)
            .output()
            .expect("run binary");
        check(
            &mut failures,
            status.status.success(),
            format!(
                "run with {threads} threads failed: {}",
                String::from_utf8_lossy(&status.stderr)
            ),
        );
        let summary = std::fs::read(out.join("summary.csv")).unwrap_or_default();
        let paths = std::fs::read(out.join("paths.csv")).unwrap_or_default();
        outputs.push((summary, paths));
    }
    check(
        &mut failures,
        outputs[0].0 == outputs[1].0,
        "summary.csv differs across thread counts".into(),
    );
    check(
        &mut failures,
        outputs[0].1 == outputs[1].1,
        "paths.csv differs across thread counts".into(),
    );
    check(
        &mut failures,
        !outputs[0].0.is_empty() && !outputs[0].1.is_empty(),
        "empty outputs".into(),
    );
    let _ = std::fs::remove_dir_all(&dir);
    verdict(11, "byte-identical output for any worker count", &failures);
}

#[test]
fn criterion_12_admissibility_of_analytic_trajectories() {
    let mut failures = Vec::new();
    let mut rng = Stream::new(1201);
    let mut produced = 0;
    while produced < 50 {
        let venues = random_venues(&mut rng, 1 + produced % 3, 0.008, 0.025);
        let lambda = uniform(&mut rng, 0.02, 0.15);
        let sigma = uniform(&mut rng, 0.8, 1.6);
        let agg = venues.aggregates();
        let delta = liquidator::constvol::delta_n(&agg, lambda, sigma);
        // place the penalty above the admissibility threshold by design
        let threshold = liquidator::constvol::condition_14_threshold(&agg, delta);
        let penalty = threshold * uniform(&mut rng, 1.05, 1.3);
        let sol = match ConstantVolSolution::new(venues, QUANTITY, HORIZON, lambda, penalty, sigma)
        {
            Ok(s) => s,
            Err(_) => continue,
        };
        assert!(sol.condition_14());
        let curve = sol.trajectory(8000);
        let report = check_admissibility(&curve.times, &curve.rates, QUANTITY, HORIZON);
        check(
            &mut failures,
            report.nonnegative && report.consistent,
            format!(
                "draw {produced}: nonnegative={} consistent={} violation={:.3e}",
                report.nonnegative, report.consistent, report.max_violation
            ),
        );
        produced += 1;
    }
    verdict(12, "admissibility of analytic trajectories", &failures);
}
