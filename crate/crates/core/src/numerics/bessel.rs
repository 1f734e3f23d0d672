//! Modified Bessel function of the first kind, real order ν ≥ 0.
//!
//! For x ≤ 30 the ascending power series is summed directly (all terms are
//! positive). Above that, the Hankel large-argument expansion is used while
//! ν² ≤ 8x, and the uniform (Debye) expansion in ν beyond, where ν > 15.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Argument at which the evaluation switches from the series to the
/// large-argument route.
pub const SERIES_LIMIT: f64 = 30.0;

const MAX_TERMS: usize = 10_000;

/// I_ν(x). Overflows to `inf` for large x; use [`bessel_i_scaled`] there.
pub fn bessel_i(nu: f64, x: f64) -> Result<f64> {
    Ok(ln_bessel_i_scaled(nu, x)?.map_or(0.0, |l| (l + x).exp()))
}

/// e^{-x} I_ν(x).
pub fn bessel_i_scaled(nu: f64, x: f64) -> Result<f64> {
    Ok(ln_bessel_i_scaled(nu, x)?.map_or(0.0, f64::exp))
}

/// ln(e^{-x} I_ν(x)), or `None` when I_ν(x) = 0 (x = 0, ν > 0).
pub fn ln_bessel_i_scaled(nu: f64, x: f64) -> Result<Option<f64>> {
    if !(nu >= 0.0) || !(x >= 0.0) || !nu.is_finite() || !x.is_finite() {
        return Err(Error::arg(format!("bessel_i needs nu >= 0, x >= 0 (got {nu}, {x})")));
    }
    if x == 0.0 {
        return Ok(if nu == 0.0 { Some(0.0) } else { None });
    }
    if x <= SERIES_LIMIT {
        Ok(Some(ln_series_scaled(nu, x)))
    } else {
        ln_large_argument_scaled(nu, x).map(Some)
    }
}

fn ln_series_scaled(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..MAX_TERMS {
        let k = k as f64;
        term *= q / (k * (k + nu));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    nu * (0.5 * x).ln() - libm::lgamma(nu + 1.0) + sum.ln() - x
}

/// Hankel expansion of e^{-x} I_ν(x) for x > 30 and ν² of order x or less.
fn hankel_scaled(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (8.0 * k as f64 * x);
        // past the transient hump, growth means the asymptotic tail
        if odd * odd > mu && next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// Debye polynomials U_k(p), coefficients in ascending powers, from
/// U_{k+1} = ½p²(1 − p²)U_k' + ⅛∫₀ᵖ(1 − 5t²)U_k dt.
fn debye_polynomials() -> &'static [Vec<f64>] {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut out = vec![vec![1.0]];
        for k in 0..DEBYE_TERMS {
            let u = &out[k];
            let mut next = vec![0.0; u.len() + 3];
            // ½ (p² − p⁴) U'
            for (n, &c) in u.iter().enumerate().skip(1) {
                let d = c * n as f64;
                next[n + 1] += 0.5 * d;
                next[n + 3] -= 0.5 * d;
            }
            // ⅛ ∫ (1 − 5t²) U
            for (n, &c) in u.iter().enumerate() {
                next[n + 1] += c / (8.0 * (n + 1) as f64);
                next[n + 3] -= 5.0 * c / (8.0 * (n + 3) as f64);
            }
            out.push(next);
        }
        out
    })
}

const DEBYE_TERMS: usize = 16;

fn poly(coeffs: &[f64], p: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * p + c)
}

/// Uniform (Debye) expansion of ln(e^{-x} I_ν(x)) for large ν.
fn ln_debye_scaled(nu: f64, x: f64) -> f64 {
    let z = x / nu;
    let root = (1.0 + z * z).sqrt();
    let p = 1.0 / root;
    // νη − x with η = √(1+z²) + ln(z / (1 + √(1+z²))), rearranged to avoid
    // cancelling ν√(1+z²) against νz
    let exponent = nu / (root + z) + nu * (z / (1.0 + root)).ln();
    let mut sum = 1.0;
    let mut scale = 1.0;
    for u in debye_polynomials().iter().skip(1) {
        scale /= nu;
        sum += poly(u, p) * scale;
        if scale < 1e-17 {
            break;
        }
    }
    exponent - 0.5 * (2.0 * std::f64::consts::PI * nu).ln() - 0.25 * (1.0 + z * z).ln() + sum.ln()
}

fn ln_large_argument_scaled(nu: f64, x: f64) -> Result<f64> {
    // Hankel terms shrink from the first one while ν² ≤ 2x; allowing 8x
    // costs at most one digit to the transient growth.
    if nu * nu <= 8.0 * x {
        let h = hankel_scaled(nu, x);
        if !(h > 0.0) {
            return Err(Error::SeriesCap(MAX_TERMS));
        }
        Ok(h.ln())
    } else {
        Ok(ln_debye_scaled(nu, x))
    }
}
