//! First-passage probabilities of drifted Brownian motion.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{adaptive_quadrature, ln_bessel_i_scaled, ln_normal_cdf, normal_cdf, QuadratureConfig};

/// Hard cap on the number of Bessel terms in the wedge series.
pub const SERIES_CAP: usize = 500;

/// Correlations this close to ±1 are rejected by the bivariate formula.
pub const CORRELATION_LIMIT: f64 = 1.0 - 1e-9;

/// Gaussian half-width (in standard deviations) of the radial integration
/// window around the tilted end point.
const RADIAL_WIDTH: f64 = 10.0;

/// Largest unresolvable part of a joint survival probability accepted
/// before [`Error::PrecisionLoss`] is returned.
pub const PRECISION_LIMIT: f64 = 1e-6;

/// P(inf_{t≤T} (u + ϱt + sB(t)) < 0) for a standard Brownian motion B and
/// s² = `variance`.
pub fn univariate_bm_ruin(reserve: f64, drift: f64, variance: f64, horizon: f64) -> Result<f64> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::arg(format!("variance rate must be positive, got {variance}")));
    }
    if !(reserve >= 0.0) || !(horizon >= 0.0) || !drift.is_finite() {
        return Err(Error::arg(format!(
            "need u >= 0, T >= 0 and finite drift (got u = {reserve}, T = {horizon}, drift = {drift})"
        )));
    }
    if horizon == 0.0 {
        return Ok(0.0);
    }
    if reserve == 0.0 {
        return Ok(1.0);
    }
    if reserve.is_infinite() || horizon.is_infinite() {
        return Ok(if horizon.is_infinite() && drift <= 0.0 && reserve.is_finite() {
            1.0
        } else if horizon.is_infinite() && reserve.is_finite() {
            (-2.0 * drift * reserve / variance).exp()
        } else {
            0.0
        });
    }
    let s = (variance * horizon).sqrt();
    let direct = normal_cdf((-reserve - drift * horizon) / s);
    // e^{-2ϱu/s²} can overflow on its own when ϱ < 0; the product cannot exceed 1
    let reflected = (-2.0 * drift * reserve / variance + ln_normal_cdf((-reserve + drift * horizon) / s)).exp();
    Ok((direct + reflected).clamp(0.0, 1.0))
}

/// 1 − [`univariate_bm_ruin`].
pub fn univariate_bm_survival(reserve: f64, drift: f64, variance: f64, horizon: f64) -> Result<f64> {
    if horizon > 0.0 && reserve > 0.0 && variance > 0.0 {
        // complement computed directly to keep precision when ruin is close to 1
        let s = (variance * horizon).sqrt();
        let a = normal_cdf((reserve + drift * horizon) / s);
        let b = (-2.0 * drift * reserve / variance + ln_normal_cdf((-reserve + drift * horizon) / s)).exp();
        if a.is_finite() && b.is_finite() && drift.is_finite() && reserve.is_finite() && horizon.is_finite() {
            return Ok((a - b).clamp(0.0, 1.0));
        }
    }
    univariate_bm_ruin(reserve, drift, variance, horizon).map(|p| 1.0 - p)
}

/// P(inf_{t≤T} (uᵢ + ϱᵢt + Bᵢ(t)) > 0 for i = 1, 2) where B is a Brownian
/// motion with covariance `cov` per unit time.
///
/// The pair is standardised and decorrelated, which maps the positive
/// quadrant onto a wedge of angle β = π/2 + arcsin ρ. The killed transition
/// density of driftless Brownian motion in the wedge is the classical
/// eigenfunction series in I_{nπ/β}; the drift enters through a Girsanov
/// factor. The resulting density is integrated over the wedge in polar
/// coordinates, radius outside and angle inside, so that the Bessel values
/// are computed once per radius.
///
/// The result is accurate to `tol` unless strong drift and correlation push
/// mass to where the series cannot be resolved in double precision; that
/// part is bounded, and [`Error::PrecisionLoss`] is returned when it exceeds
/// [`PRECISION_LIMIT`].
pub fn bivariate_bm_joint_survival(
    reserves: [f64; 2],
    drift: [f64; 2],
    cov: [[f64; 2]; 2],
    horizon: f64,
    tol: f64,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::arg(format!("tolerance must be positive, got {tol}")));
    }
    if !(cov[0][0] > 0.0) || !(cov[1][1] > 0.0) || !cov[0][1].is_finite() {
        return Err(Error::arg("covariance must have positive diagonal"));
    }
    let asym = (cov[0][1] - cov[1][0]).abs();
    if asym > 1e-12 * (cov[0][0] * cov[1][1]).sqrt() {
        return Err(Error::arg("covariance must be symmetric"));
    }
    if reserves.iter().chain(drift.iter()).any(|x| !x.is_finite()) || reserves.iter().any(|&u| u < 0.0) {
        return Err(Error::arg("reserves must be finite and >= 0, drifts finite"));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::arg(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    let s = [cov[0][0].sqrt(), cov[1][1].sqrt()];
    let rho = cov[0][1] / (s[0] * s[1]);
    if !(rho.abs() < CORRELATION_LIMIT) {
        return Err(Error::NearDegenerateCorrelation(rho));
    }
    if reserves[0] == 0.0 || reserves[1] == 0.0 {
        return Ok(0.0);
    }
    if horizon == 0.0 {
        return Ok(1.0);
    }

    let c = (1.0 - rho * rho).sqrt();
    let y0 = [reserves[0] / s[0], reserves[1] / s[1]];
    let d = [drift[0] / s[0], drift[1] / s[1]];
    let w0 = [y0[0], (y0[1] - rho * y0[0]) / c];
    let e = [d[0], (d[1] - rho * d[0]) / c];
    let tilt = rho.asin();
    let wedge = 0.5 * PI + tilt;
    let nu1 = PI / wedge;
    let r0 = w0[0].hypot(w0[1]);
    let theta0 = w0[1].atan2(w0[0]) + tilt;
    let e_norm = e[0].hypot(e[1]);
    let t = horizon;

    let start_sines: Vec<f64> = (1..=SERIES_CAP).map(|n| (n as f64 * nu1 * theta0).sin()).collect();
    // the integrand is bounded by a Gaussian centred at w0 + eT
    let mean = [w0[0] + e[0] * t, w0[1] + e[1] * t];
    let centre = mean[0].hypot(mean[1]);
    let theta_mean = mean[1].atan2(mean[0]) + tilt;
    let theta_drift = e[1].atan2(e[0]) + tilt;
    let half = RADIAL_WIDTH * t.sqrt();
    let (lo, hi) = ((centre - half).max(0.0), centre + half);

    // Roundoff of the sine sum relative to the free bound grows like
    // exp(r r0 (1 − cos(θ − θ0)) / T), whatever the drift; refuse early when
    // too much of the drifted mass lies where that exceeds the precision.
    let lost_estimate = 0.5 * gaussian_mass(mean, t, |w| {
        let r = w[0].hypot(w[1]);
        let theta = w[1].atan2(w[0]) + tilt;
        (0.0..=wedge).contains(&theta) && r * r0 * (1.0 - (theta - theta0).cos()) / t >= LOST_EXPONENT
    });
    if lost_estimate > PRECISION_LIMIT {
        return Err(Error::PrecisionLoss(lost_estimate));
    }
    // Away from the start the tilt multiplies the sine sum by up to
    // e^{2|e|r}, so the series is summed to roundoff rather than to tol.
    let series_tol = f64::EPSILON;
    let inner_config = QuadratureConfig::new(tol, 0.0, 400);
    let outer_config = QuadratureConfig::new(tol, 1e-15, 400);
    let mut failure: Option<Error> = None;
    let mut coeffs = Vec::with_capacity(SERIES_CAP);
    let mut lost_samples: Vec<(f64, f64)> = Vec::new();

    // (r × angular integral, r × its unresolvable part)
    let radial = |r: f64, coeffs: &mut Vec<f64>| -> Result<(f64, f64)> {
        if r <= 0.0 {
            return Ok((0.0, 0.0));
        }
        let Some((a, b)) = angular_window(r, centre, half, theta_mean, wedge) else {
            return Ok((0.0, 0.0));
        };
        let z = r * r0 / t;
        // r-only part of the exponent, shifted by the largest e·w on the
        // window so the angular factor never exceeds one
        let shift = r * e_norm * max_cos_on(theta_drift, a, b);
        let base = -(e[0] * w0[0] + e[1] * w0[1]) - 0.5 * e_norm * e_norm * t - (r - r0).powi(2) / (2.0 * t) + shift;
        coeffs.clear();
        let mut total = 0.0;
        let mut converged = false;
        for n in 1..=SERIES_CAP {
            let Some(ln_ie) = ln_bessel_i_scaled(n as f64 * nu1, z)? else {
                converged = true;
                break;
            };
            let mag = (base + ln_ie).exp();
            coeffs.push(start_sines[n - 1] * mag);
            total += mag;
            if mag == 0.0 || mag < series_tol * total {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::SeriesCap(SERIES_CAP));
        }
        if total == 0.0 {
            return Ok((0.0, 0.0));
        }
        // Killing only removes mass, so the free drifted density bounds the
        // value. Where the roundoff of the sine sum, amplified by the tilt,
        // reaches that bound the value is unresolvable: the midpoint is used
        // and half the bound is booked as uncertainty.
        let floor = 16.0 * f64::EPSILON * total;
        let pieces = |theta: f64| {
            let phi = theta - tilt;
            let (w1, w2) = (r * phi.cos(), r * phi.sin());
            let tiltexp = (e[0] * w1 + e[1] * w2 - shift).exp();
            let free = wedge / (4.0 * PI) * (-((w1 - mean[0]).powi(2) + (w2 - mean[1]).powi(2)) / (2.0 * t)).exp();
            (tiltexp, free, floor * tiltexp >= 0.01 * free)
        };
        let lost_at = |theta: f64| pieces(theta).2;
        let resolved = |theta: f64| {
            let (tiltexp, free, _) = pieces(theta);
            let mut sum = 0.0;
            for (k, a) in coeffs.iter().enumerate() {
                sum += a * ((k + 1) as f64 * nu1 * theta).sin();
            }
            (sum * tiltexp).clamp(0.0, free)
        };
        // error that would move the final probability by tol; aim well below
        let budget = tol * wedge * t / (2.0 * r * (hi - lo));
        let cfg = QuadratureConfig {
            abs_tol: 1e-3 * budget,
            ..inner_config
        };
        let loose = QuadratureConfig::new(1e-2, 1e-3 * budget, 100);
        let (mut value, mut lost) = (0.0, 0.0);
        for (p, q, is_lost) in split_by(lost_at, a, b) {
            if is_lost {
                let half_free = adaptive_quadrature(|th| 0.5 * pieces(th).1, p, q, &loose);
                value += half_free.value;
                lost += half_free.value + half_free.error;
            } else {
                let noise = adaptive_quadrature(|th| floor * pieces(th).0, p, q, &loose);
                let noise = noise.value + noise.error;
                let res = adaptive_quadrature(&resolved, p, q, &cfg);
                // near a lost piece the sum is only good to its roundoff
                if !res.converged && res.error > budget + noise {
                    return Err(Error::Quadrature(format!(
                        "angular integral at r = {r} did not converge (error {:.3e})",
                        res.error
                    )));
                }
                value += res.value;
                lost += noise + if res.converged { 0.0 } else { res.error };
            }
        }
        Ok((r * value, r * lost))
    };

    let res = adaptive_quadrature(
        |r| {
            if failure.is_some() {
                return 0.0;
            }
            match radial(r, &mut coeffs) {
                Ok((v, lost)) => {
                    lost_samples.push((r, lost));
                    v
                }
                Err(err) => {
                    failure = Some(err);
                    0.0
                }
            }
        },
        lo,
        hi,
        &outer_config,
    );
    if let Some(err) = failure {
        return Err(err);
    }
    let scale = 2.0 / (wedge * t);
    // the quadrature nodes are dense wherever the integrand varies, which
    // is good enough for an error estimate
    lost_samples.sort_by(|x, y| x.0.total_cmp(&y.0));
    let lost: f64 = lost_samples
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum();
    let uncertainty = scale * lost;
    if !res.converged && scale * res.error > tol + uncertainty {
        return Err(Error::Quadrature(format!(
            "radial integral did not converge (value {}, error {:.3e})",
            scale * res.value,
            scale * res.error
        )));
    }
    let uncertainty = uncertainty + if res.converged { 0.0 } else { scale * res.error };
    if uncertainty > PRECISION_LIMIT {
        return Err(Error::PrecisionLoss(uncertainty));
    }
    let value = scale * res.value;
    if !(-1e-6..=1.0 + 1e-6).contains(&value) {
        return Err(Error::Quadrature(format!("joint survival {value} outside [0, 1]")));
    }
    Ok(value.clamp(0.0, 1.0))
}

/// ln(0.01 / (32ε)): where the roundoff of the wedge series reaches 1% of
/// the free drifted density.
const LOST_EXPONENT: f64 = 28.0;

/// Mass of N(mean, t I) on the set where `inside` holds, by a midpoint grid
/// over ±6 standard deviations.
fn gaussian_mass(mean: [f64; 2], t: f64, inside: impl Fn([f64; 2]) -> bool) -> f64 {
    const N: usize = 96;
    let sd = t.sqrt();
    let h = 12.0 / N as f64;
    let weights: Vec<f64> = (0..N)
        .map(|i| {
            let x = -6.0 + (i as f64 + 0.5) * h;
            (-0.5 * x * x).exp() * h / (2.0 * PI).sqrt()
        })
        .collect();
    let mut mass = 0.0;
    for (i, wi) in weights.iter().enumerate() {
        for (k, wk) in weights.iter().enumerate() {
            let x = -6.0 + (i as f64 + 0.5) * h;
            let y = -6.0 + (k as f64 + 0.5) * h;
            if inside([mean[0] + sd * x, mean[1] + sd * y]) {
                mass += wi * wk;
            }
        }
    }
    mass
}

/// Part of [0, wedge] (as θ) within distance `half` of the point at
/// radius `centre`, angle `theta_mean`, on the circle of radius r.
fn angular_window(r: f64, centre: f64, half: f64, theta_mean: f64, wedge: f64) -> Option<(f64, f64)> {
    if centre <= half || r <= half - centre {
        return Some((0.0, wedge));
    }
    let cos_delta = (r * r + centre * centre - half * half) / (2.0 * r * centre);
    if cos_delta >= 1.0 {
        return None;
    }
    let delta = cos_delta.max(-1.0).acos();
    let mut window: Option<(f64, f64)> = None;
    for k in -1..=1 {
        let mid = theta_mean + 2.0 * PI * k as f64;
        let (a, b) = ((mid - delta).max(0.0), (mid + delta).min(wedge));
        if a < b {
            window = Some(window.map_or((a, b), |(x, y)| (x.min(a), y.max(b))));
        }
    }
    window
}

/// Splits [a, b] into maximal pieces on which `pred` is constant, located
/// on a grid and refined by bisection.
fn split_by(pred: impl Fn(f64) -> bool, a: f64, b: f64) -> Vec<(f64, f64, bool)> {
    const GRID: usize = 64;
    let mut out = Vec::new();
    let mut start = a;
    let mut state = pred(a);
    let mut prev = a;
    for k in 1..=GRID {
        let x = a + (b - a) * k as f64 / GRID as f64;
        if pred(x) != state {
            let (mut lo, mut hi) = (prev, x);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if pred(mid) == state {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push((start, hi, state));
            start = hi;
            state = !state;
        }
        prev = x;
    }
    out.push((start, b, state));
    out
}

/// max of cos(θ − θ*) over θ ∈ [a, b].
fn max_cos_on(theta_star: f64, a: f64, b: f64) -> f64 {
    let inside = (-1..=1).any(|k| {
        let s = theta_star + 2.0 * PI * k as f64;
        a <= s && s <= b
    });
    if inside {
        1.0
    } else {
        (a - theta_star).cos().max((b - theta_star).cos())
    }
}
