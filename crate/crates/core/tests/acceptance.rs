//! Full-scale acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines come out in order; the
//! process exits non-zero if any criterion fails.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use ruinlab::config::Method;
use ruinlab::diffusion::{
    bivariate_bm_joint_survival, diffusion_spec, multivariate_ruin_diffusion, univariate_bm_survival, Regime,
};
use ruinlab::experiment::{fclt_check, max_deviations, run, Example};
use ruinlab::markov::{at_most_one_switch_probability, fundamental_matrix, stationary_distribution};
use ruinlab::model::*;
use ruinlab::numerics::rng_stream;
use ruinlab::simulate::{estimate_ruin_curve, MonteCarloSettings};
use ruinlab::switch::{bm_scaling_factor, chi, exp_single_switch_ruin};
use ruinlab::QuadratureConfig;

const PATHS: u64 = 1_000_000;
const GRID: [f64; 5] = [10.0, 20.0, 30.0, 40.0, 50.0];

type Outcome = Result<String, String>;

fn report(n: usize, title: &str, started: Instant, outcome: &Outcome) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => println!("PASS {n}. {title} ({secs:.1} s): {detail}"),
        Err(detail) => println!("FAIL {n}. {title} ({secs:.1} s): {detail}"),
    }
    outcome.is_ok()
}

fn base_correlation() -> Outcome {
    let rho = diffusion_spec(&base_model(), Regime::BALANCED).map_err(|e| e.to_string())?.correlation(0, 1);
    let detail = format!("correlation {rho:.5}, target 0.1304 ± 0.005");
    if (rho - 0.1304).abs() <= 0.005 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn constant_intensity_oracle() -> Outcome {
    let quad = QuadratureConfig::default();
    let mut worst: f64 = 0.0;
    let mut misses = Vec::new();
    for &lambda in &[0.45, 1.8] {
        let model = RiskModel::with_common_claims(
            vec![vec![lambda]],
            ClaimDistribution::exponential(1.0),
            vec![1.0],
            EnvironmentModel::starting_in(vec![vec![0.0]], 0),
        );
        for &u in &[0.0, 5.0, 10.0] {
            let query = RuinQuery::all(vec![u], 50.0, 0);
            let curve = estimate_ruin_curve(&model, &query, &[10.0, 50.0], &MonteCarloSettings::new(PATHS, 2))
                .map_err(|e| e.to_string())?;
            for est in curve {
                let t = est.horizon;
                let exact = exp_single_switch_ruin(u, 1.0, 1.0, lambda, lambda, t, t, &quad).map_err(|e| e.to_string())?;
                let mc = est.requested;
                // a zero-hit estimate has a zero-width interval; one path is the resolution
                let band = mc.ci_halfwidth.max(1.0 / PATHS as f64);
                let z = (mc.estimate - exact).abs() / band;
                worst = worst.max(z);
                if z > 3.0 {
                    misses.push(format!("λ={lambda} u={u} T={t}: mc {:.6} vs {exact:.6}", mc.estimate));
                }
            }
        }
    }
    let detail = format!("12 points, worst |mc − formula| = {worst:.2} CI halfwidths");
    if misses.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", misses.join("; ")))
    }
}

struct BmCase {
    reserves: [f64; 2],
    drift: [f64; 2],
    variance: [f64; 2],
    rho: f64,
    horizon: f64,
}

/// Euler scheme for the correlated pair; between grid points each
/// coordinate survives with its Brownian-bridge probability given both
/// endpoints, and the path contributes the product of those probabilities.
fn euler_survival(case: &BmCase, paths: u64, steps: usize, seed: u64) -> (f64, f64) {
    let dt = case.horizon / steps as f64;
    let sd = [case.variance[0].sqrt() * dt.sqrt(), case.variance[1].sqrt() * dt.sqrt()];
    let orth = (1.0 - case.rho * case.rho).sqrt();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for path in 0..paths {
        let mut rng = rng_stream(seed, path);
        let mut x = case.reserves;
        let mut weight = 1.0;
        for _ in 0..steps {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let next = [
                x[0] + case.drift[0] * dt + sd[0] * z1,
                x[1] + case.drift[1] * dt + sd[1] * (case.rho * z1 + orth * z2),
            ];
            if next[0] <= 0.0 || next[1] <= 0.0 {
                weight = 0.0;
                break;
            }
            for i in 0..2 {
                weight *= -(-2.0 * x[i] * next[i] / (case.variance[i] * dt)).exp_m1();
            }
            x = next;
        }
        sum += weight;
        sum_sq += weight * weight;
    }
    let n = paths as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn bivariate_oracle() -> Outcome {
    let cases = [
        BmCase { reserves: [1.0, 1.5], drift: [0.3, 0.2], variance: [1.0, 2.0], rho: -0.5, horizon: 4.0 },
        BmCase { reserves: [2.0, 1.0], drift: [0.1, 0.4], variance: [1.5, 1.0], rho: 0.0, horizon: 5.0 },
        BmCase { reserves: [2.0, 2.5], drift: [0.35, 0.35], variance: [1.3, 1.3], rho: 0.13, horizon: 5.0 },
        BmCase { reserves: [1.0, 2.0], drift: [-0.1, 0.2], variance: [1.0, 1.0], rho: 0.5, horizon: 3.0 },
        BmCase { reserves: [1.5, 1.5], drift: [0.2, 0.2], variance: [1.0, 1.5], rho: 0.9, horizon: 5.0 },
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (k, case) in cases.iter().enumerate() {
        let c = case.rho * (case.variance[0] * case.variance[1]).sqrt();
        let formula = bivariate_bm_joint_survival(
            case.reserves,
            case.drift,
            [[case.variance[0], c], [c, case.variance[1]]],
            case.horizon,
            1e-9,
        )
        .map_err(|e| e.to_string())?;
        let (mc, se) = euler_survival(case, PATHS, 1000, 100 + k as u64);
        let z = (formula - mc).abs() / se;
        ok &= z <= 3.0;
        lines.push(format!("ρ={}: {formula:.5} vs {mc:.5} ({z:.2} se)", case.rho));
    }
    let detail = lines.join(", ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fclt() -> Outcome {
    let report = fclt_check(&base_model(), 64.0, 100_000, 31, 0).map_err(|e| e.to_string())?;
    let diag = report.diagonal_errors();
    let corr = report.correlation_error();
    let detail = format!(
        "diagonal relative errors {:?}, correlation error {corr:.4}",
        diag.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>()
    );
    if diag.iter().all(|&e| e <= 0.05) && corr <= 0.02 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn deviations(example: Example) -> Result<(f64, f64), String> {
    let mut cfg = example.config();
    cfg.horizons = GRID.to_vec();
    cfg.methods = vec![Method::MonteCarlo, Method::Diffusion, Method::SingleSwitch];
    cfg.mc.paths = PATHS;
    let rows = run(&cfg).map_err(|e| e.to_string())?;
    let devs = max_deviations(&rows);
    let get = |m: Method| devs.iter().find(|(k, _)| *k == m).map(|(_, d)| *d).unwrap();
    Ok((get(Method::Diffusion), get(Method::SingleSwitch)))
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn check(failures: &mut Vec<String>, ok: bool, what: impl FnOnce() -> String) {
    if !ok {
        failures.push(what());
    }
}

fn property_suite() -> Outcome {
    let quad = QuadratureConfig::default();
    let models = [
        ("example1", base_model()),
        ("example2", two_state_model(0.45, 1.8, 1.0 / 64.0)),
        ("example3", two_state_model(0.36, 1.44, 1.0)),
    ];
    let mut failures = Vec::new();

    let three = EnvironmentModel::starting_in(
        vec![vec![-1.5, 1.0, 0.5], vec![0.2, -0.2, 0.0], vec![3.0, 1.0, -4.0]],
        0,
    );
    for env in models.iter().map(|(_, m)| m.environment.clone()).chain([three]) {
        let n = env.states();
        let pi = stationary_distribution(&env).unwrap();
        let ups = fundamental_matrix(&env, &pi).unwrap();
        let q = DMatrix::from_fn(n, n, |i, k| env.rate(i, k));
        let proj = pi.projector();
        let identity = ((&proj - &q) * ups.matrix() - (DMatrix::identity(n, n) - &proj)).amax();
        let rows = (ups.matrix() * DVector::from_element(n, 1.0)).amax();
        let stationary = (DVector::from_column_slice(pi.probabilities()).transpose() * &q).amax();
        check(&mut failures, identity.max(rows).max(stationary) <= 1e-10, || {
            format!("fundamental matrix identities off by {identity:.1e}/{rows:.1e}/{stationary:.1e}")
        });
    }

    for (name, model) in &models {
        for j in 0..2 {
            let mut prev = 1.0;
            for k in 0..=100 {
                let p = at_most_one_switch_probability(&model.environment, j, 0.5 * k as f64);
                check(&mut failures, (0.0..=1.0).contains(&p) && p <= prev + 1e-14, || {
                    format!("{name}: switch probability not monotone at T = {}", 0.5 * k as f64)
                });
                prev = p;
            }
        }
    }
    for q in [0.1, 1.0, 3.0] {
        let env = EnvironmentModel::starting_in(vec![vec![-q, q], vec![q * (1.0 + 1e-12), -q * (1.0 + 1e-12)]], 0);
        for t in [0.5, 5.0, 20.0] {
            let want = (-q * t).exp() * (1.0 + q * t);
            let got = at_most_one_switch_probability(&env, 0, t);
            check(&mut failures, (got - want).abs() < 1e-9, || format!("equal-rate limit q={q} T={t}: {got} vs {want}"));
        }
    }

    for rho in [-0.9, -0.4, 0.0, 0.13, 0.6, 0.95] {
        for (u, d, t) in [([1.0, 3.0], [0.1, 0.3], 5.0), ([6.0, 4.0], [0.5, -0.1], 30.0), ([10.0, 10.0], [0.4, 0.4], 50.0)] {
            let s = [1.2f64, 0.8];
            let c = rho * (s[0] * s[1]).sqrt();
            let joint = bivariate_bm_joint_survival(u, d, [[s[0], c], [c, s[1]]], t, 1e-8).unwrap();
            let a = univariate_bm_survival(u[0], d[0], s[0], t).unwrap();
            let b = univariate_bm_survival(u[1], d[1], s[1], t).unwrap();
            check(&mut failures, joint <= a.min(b) + 1e-6 && joint >= (a + b - 1.0).max(0.0) - 1e-6, || {
                format!("Fréchet bounds violated at ρ={rho}, u={u:?}, T={t}: {joint}")
            });
        }
    }

    for (tau, d, var) in [(5.0f64, 0.3, 1.0f64), (20.0, -0.2, 2.5), (0.5, 0.0, 0.4)] {
        let s: f64 = (var * tau).sqrt();
        let far = bm_scaling_factor(2.0, 50.0 * s, tau, d, var).unwrap();
        let short = bm_scaling_factor(2.0, 1.0, 1e-9, d, var).unwrap();
        let u = 0.3 * s;
        let ratio = bm_scaling_factor(0.0, u, tau, d, var).unwrap() / bm_scaling_factor(1e6, u, tau, d, var).unwrap();
        let want = -(-2.0 * u * u / (var * tau)).exp_m1();
        check(&mut failures, (far - 1.0).abs() < 1e-6 && (short - 1.0).abs() < 1e-6 && (ratio - want).abs() < 1e-12, || {
            format!("scaling factor limits at τ={tau}: {far}, {short}, {ratio} vs {want}")
        });
    }

    for (name, model) in &models {
        for state in 0..2 {
            let mut prev = 1.0;
            for k in 0..10 {
                let u = 1.5 * k as f64;
                let query = RuinQuery::all(vec![u, u + 1.0], 30.0, state);
                let x = chi(model, &query, &quad).unwrap();
                check(&mut failures, x <= prev + 1e-7, || {
                    format!("{name} state {}: χ increases in u at u = {u}", state + 1)
                });
                prev = x;
            }
            let (mut prev_d, mut prev_x) = (0.0, 0.0);
            let mut chi_reported = false;
            for k in 1..=25 {
                let t = 2.0 * k as f64;
                let query = RuinQuery::all(vec![10.0, 10.0], t, state);
                let d = multivariate_ruin_diffusion(model, &query).unwrap().probability;
                let x = chi(model, &query, &quad).unwrap();
                check(&mut failures, d >= prev_d - 1e-9, || format!("{name}: diffusion decreases at T = {t}"));
                if x < prev_x - 1e-9 && !chi_reported {
                    chi_reported = true;
                    failures.push(format!("{name} state {}: χ({t}) = {x:.6} < {prev_x:.6}", state + 1));
                }
                prev_d = d;
                prev_x = x;
            }
        }
    }
    for (name, model) in &models {
        let mut prev = 1.0;
        for k in 0..8 {
            let u = 2.0 * k as f64;
            let p = multivariate_ruin_diffusion(model, &RuinQuery::all(vec![u, u], 30.0, 0)).unwrap().probability;
            check(&mut failures, p <= prev + 1e-9, || format!("{name}: diffusion increases in u at u = {u}"));
            prev = p;
        }
    }

    let query = RuinQuery::all(vec![8.0, 8.0], 20.0, 0);
    let grid = [5.0, 10.0, 20.0];
    let one = estimate_ruin_curve(&base_model(), &query, &grid, &MonteCarloSettings::new(50_000, 9).with_threads(1)).unwrap();
    let four = estimate_ruin_curve(&base_model(), &query, &grid, &MonteCarloSettings::new(50_000, 9).with_threads(4)).unwrap();
    check(&mut failures, one == four, || "simulation differs between 1 and 4 threads".into());
    check(&mut failures, one.windows(2).all(|w| w[1].all.hits >= w[0].all.hits), || {
        "simulated ruin decreases in T".into()
    });
    let lower = estimate_ruin_curve(
        &base_model(),
        &RuinQuery::all(vec![10.0, 10.0], 20.0, 0),
        &grid,
        &MonteCarloSettings::new(50_000, 9),
    )
    .unwrap();
    check(&mut failures, one.iter().zip(&lower).all(|(a, b)| b.all.hits <= a.all.hits), || {
        "simulated ruin increases in u on common paths".into()
    });

    if failures.is_empty() {
        Ok("markov identities, switch probability, Fréchet bounds, scaling factor, monotonicity, thread determinism".into())
    } else {
        Err(failures.join("; "))
    }
}

fn main() {
    let mut all = true;
    let t = Instant::now();
    all &= report(1, "diffusion correlation of the base model", t, &base_correlation());
    let t = Instant::now();
    all &= report(2, "constant-intensity formula vs Monte Carlo", t, &constant_intensity_oracle());
    let t = Instant::now();
    all &= report(3, "bivariate Brownian survival vs Euler simulation", t, &bivariate_oracle());
    let t = Instant::now();
    all &= report(4, "empirical covariance of the n = 64 scaled claims", t, &fclt());

    let t = Instant::now();
    let ex1 = deviations(Example::Base);
    let ex2 = deviations(Example::SlowEnvironment);
    let ex3 = deviations(Example::LowArrivals);
    let c5 = ex1.clone().and_then(|(d, s)| {
        verdict(d <= 0.05 && d < s, format!("max |diffusion − mc| {d:.6}, max |single-switch − mc| {s:.6}"))
    });
    all &= report(5, "example 1: diffusion within 0.05 and better than single-switch", t, &c5);
    let c6 = ex2.and_then(|(d, s)| {
        verdict(s <= 0.02 && s < d, format!("max |single-switch − mc| {s:.6}, max |diffusion − mc| {d:.6}"))
    });
    all &= report(6, "example 2: single-switch within 0.02 and better than diffusion", t, &c6);
    let c7 = ex1.and_then(|(d1, s1)| {
        let (d3, s3) = ex3?;
        verdict(
            d3 > d1 && (s3 - s1).abs() <= 0.01,
            format!("diffusion {d1:.6} → {d3:.6}, single-switch {s1:.6} → {s3:.6} (change {:.6})", (s3 - s1).abs()),
        )
    });
    all &= report(7, "example 3: diffusion loses accuracy, single-switch unchanged", t, &c7);

    let t = Instant::now();
    all &= report(8, "property suites", t, &property_suite());

    if !all {
        std::process::exit(1);
    }
}
