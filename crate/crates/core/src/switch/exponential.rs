//! Finite-time ruin with exponential claims and a piecewise-constant
//! arrival intensity.

use std::f64::consts::PI;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::numerics::{adaptive_quadrature, QuadratureConfig};

/// Time average of an intensity equal to `lambda_j` on `[0, τ]` and
/// `lambda_k` on `(τ, T]`.
pub fn lambda_star(lambda_j: f64, lambda_k: f64, tau: f64, horizon: f64) -> f64 {
    if tau >= horizon {
        return lambda_j;
    }
    (lambda_j * tau + lambda_k * (horizon - tau)) / horizon
}

/// Ruin probability before T of u + rt − S(t), where S is compound Poisson
/// with Exp(mean μ) claims and intensity `lambda_j` until τ, `lambda_k` after.
///
/// Only the total intensity over [0, T] matters, so the classical
/// Laplace-inversion formula for the constant-intensity case applies with
/// λ* = [`lambda_star`]. With β = λ*μ/r:
///
/// ψ = β e^{−(1/μ − λ*/r)u} − (1/π)∫₀^π f₁f₂/f₃ dθ    if β < 1,
/// ψ = 1 − (1/π)∫₀^π f₁f₂/f₃ dθ                          otherwise,
///
/// with f₁ = β exp{2T√(rλ*/μ) cos θ − (r/μ + λ*)T + (u/μ)(√β cos θ − 1)},
/// f₂ = cos(x) − cos(x + 2θ), x = (u/μ)√β sin θ, f₃ = 1 + β − 2√β cos θ.
#[allow(clippy::too_many_arguments)]
pub fn exp_single_switch_ruin(
    reserve: f64,
    premium: f64,
    mean: f64,
    lambda_j: f64,
    lambda_k: f64,
    tau: f64,
    horizon: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if !(reserve >= 0.0) || !reserve.is_finite() {
        return Err(Error::arg(format!("reserve must be finite and >= 0, got {reserve}")));
    }
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::arg(format!("claim mean must be positive, got {mean}")));
    }
    if !(lambda_j >= 0.0) || !(lambda_k >= 0.0) {
        return Err(Error::arg("arrival intensities must be >= 0"));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() || !(tau >= 0.0) || tau > horizon {
        return Err(Error::arg(format!("need 0 <= tau <= T (got tau = {tau}, T = {horizon})")));
    }
    if !(premium > 0.0) {
        return Err(Error::Unsupported(
            "exponential closed form needs a positive premium rate".into(),
        ));
    }
    let lam = lambda_star(lambda_j, lambda_k, tau, horizon);
    if horizon == 0.0 || lam == 0.0 {
        return Ok(0.0);
    }

    let beta = lam * mean / premium;
    let sb = beta.sqrt();
    // money in units of μ, time in units of μ/r
    let u = reserve / mean;
    let t = premium * horizon / mean;
    let a = u * sb;

    // With z = e^{iθ} the θ-integrand is Re h(z) for h meromorphic off the
    // origin, so the integral over (0, π) is a contour integral over the
    // unit circle. Shrinking the circle to the saddle radius of e^{E(z)}
    // keeps |h| ≤ β e^{Φ} with Φ ≤ 0 and removes the cancellation that
    // plagues θ near 0 for large u. The pole at min(√β, 1/√β) has residue
    // equal to the leading term, so crossing it simply drops that term.
    let pole = sb.min(1.0 / sb);
    let mut rho = (t / (t + u)).sqrt();
    if (rho - pole).abs() < 0.05 * pole {
        rho = 0.95 * pole;
    }
    let crossed = rho < pole;
    let h = |theta: f64| {
        let z = Complex::from_polar(rho, theta);
        let e = (z + z.inv()) * (t * sb) + z * a - ((1.0 + beta) * t + u);
        let rational = (Complex::new(1.0, 0.0) - z * z)
            / ((Complex::new(1.0, 0.0) - z * sb) * (Complex::new(1.0, 0.0) - z.inv() * sb));
        beta * (e.exp() * rational).re
    };
    let res = adaptive_quadrature(h, 0.0, PI, quad);
    if !res.converged {
        return Err(Error::Quadrature(format!(
            "θ-integral did not converge (value {}, error {:.3e})",
            res.value, res.error
        )));
    }
    let lead = if crossed {
        0.0
    } else if beta < 1.0 {
        beta * (-(1.0 - beta) * u).exp()
    } else {
        1.0
    };
    let raw = lead - res.value / PI;
    if !(-1e-8..=1.0 + 1e-8).contains(&raw) {
        return Err(Error::Quadrature(format!(
            "closed form gave {raw} (u = {reserve}, λ* = {lam}, T = {horizon})"
        )));
    }
    Ok(raw.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn lambda_star_values() {
        assert_eq!(lambda_star(0.45, 1.8, 7.0, 7.0), 0.45);
        assert!((lambda_star(0.45, 1.8, 25.0, 50.0) - 1.125).abs() < 1e-15);
        assert!((lambda_star(0.7, 0.7, 3.3, 10.0) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn boundary_switch_time_is_no_switch() {
        let q = quad();
        let a = exp_single_switch_ruin(10.0, 1.0, 1.0, 0.45, 1.8, 50.0, 50.0, &q).unwrap();
        let b = exp_single_switch_ruin(10.0, 1.0, 1.0, 0.45, 0.45, 20.0, 50.0, &q).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn approaches_ultimate_ruin() {
        // β = 0.5: ψ(u) = β e^{−(1−β)u}
        let q = QuadratureConfig::new(1e-10, 1e-14, 200);
        let p = exp_single_switch_ruin(4.0, 1.0, 1.0, 0.5, 0.5, 5000.0, 5000.0, &q).unwrap();
        assert!((p - 0.5 * (-2.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn scale_invariance() {
        // μ ≠ 1 and r ≠ 1 reduce to the unit case by rescaling money and time
        let q = QuadratureConfig::new(1e-10, 1e-14, 200);
        let (u, lam, t) = (3.0, 0.8, 12.0);
        let unit = exp_single_switch_ruin(u, 1.0, 1.0, lam, lam, t, t, &q).unwrap();
        let (mu, r) = (2.5, 1.7);
        // claims μ, premium r, intensity λ r / μ, horizon T μ / r, reserve u μ
        let scaled = exp_single_switch_ruin(u * mu, r, mu, lam * r / mu, lam * r / mu, t * mu / r, t * mu / r, &q)
            .unwrap();
        assert!((unit - scaled).abs() < 1e-9);
    }

    #[test]
    fn critical_loading_is_finite() {
        let p = exp_single_switch_ruin(0.0, 1.0, 1.0, 1.0, 1.0, 50.0, 50.0, &quad()).unwrap();
        assert!(p > 0.0 && p < 1.0);
    }

    /// The θ-integral exactly as written, for moderate parameters.
    fn literal(u: f64, r: f64, mu: f64, lam: f64, t: f64) -> f64 {
        let beta = lam * mu / r;
        let sb = beta.sqrt();
        let f = |th: f64| {
            let f1 = beta
                * (2.0 * t * (r * lam / mu).sqrt() * th.cos() - (r / mu + lam) * t
                    + u / mu * (sb * th.cos() - 1.0))
                    .exp();
            let x = u * lam.sqrt() / (r * mu).sqrt() * th.sin();
            let f2 = x.cos() - (x + 2.0 * th).cos();
            let f3 = 1.0 + beta - 2.0 * sb * th.cos();
            f1 * f2 / f3
        };
        let i = adaptive_quadrature(f, 0.0, PI, &QuadratureConfig::new(1e-12, 1e-15, 500)).value;
        let lead = if r > lam * mu { beta * (-(1.0 / mu - lam / r) * u).exp() } else { 1.0 };
        lead - i / PI
    }

    #[test]
    fn matches_literal_formula() {
        let q = QuadratureConfig::new(1e-10, 1e-14, 200);
        for &(u, r, mu, lam, t) in &[
            (10.0, 1.0, 1.0, 0.45, 50.0),
            (10.0, 1.0, 1.0, 1.8, 50.0),
            (5.0, 1.0, 1.0, 1.8, 10.0),
            (0.0, 1.0, 1.0, 0.45, 10.0),
            (3.0, 1.3, 0.7, 1.1, 7.0),
            (2.0, 1.0, 1.0, 1.0, 20.0),
        ] {
            let ours = exp_single_switch_ruin(u, r, mu, lam, lam, t, t, &q).unwrap();
            let lit = literal(u, r, mu, lam, t);
            assert!((ours - lit).abs() < 1e-8, "{u} {r} {mu} {lam} {t}: {ours} vs {lit}");
        }
    }

    #[test]
    fn large_reserve_with_negative_loading() {
        // the literal integrand peaks near e^{33} here while ψ ≈ 4e-16
        let p = exp_single_switch_ruin(100.0, 1.0, 1.0, 1.8, 1.8, 10.0, 10.0, &quad()).unwrap();
        assert!(p < 1e-12);
        let p = exp_single_switch_ruin(10.0, 1.0, 1.0, 1.8, 1.8, 50.0, 50.0, &quad()).unwrap();
        assert!((p - 0.996_105_657_694_673).abs() < 1e-8);
        let p = exp_single_switch_ruin(10.0, 1.0, 1.0, 0.45, 0.45, 50.0, 50.0, &quad()).unwrap();
        assert!((p - 0.001_835_242_525_601_478).abs() < 1e-10);
    }

    #[test]
    fn no_claims_no_ruin() {
        assert_eq!(exp_single_switch_ruin(1.0, 1.0, 1.0, 0.0, 0.0, 3.0, 3.0, &quad()).unwrap(), 0.0);
    }
}
