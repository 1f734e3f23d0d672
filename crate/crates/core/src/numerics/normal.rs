//! Standard normal distribution.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// ln N(x), accurate far into the lower tail where N(x) underflows.
pub fn ln_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return normal_cdf(x).ln();
    }
    // Mills ratio asymptotics: N(x) = φ(x)/|x| · (1 - 1/x² + 3/x⁴ - 15/x⁶ + ...)
    let z2 = 1.0 / (x * x);
    let series = 1.0 - z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2 * (1.0 - 7.0 * z2)));
    -0.5 * x * x - (2.0 * PI).sqrt().ln() - (-x).ln() + series.ln()
}

/// Quantile of the standard normal by Newton iteration on [`normal_cdf`].
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability must lie in (0, 1)");
    // tail-shaped starting point; linear near the center
    let mut x = if p < 0.5 {
        -(-2.0 * p.ln()).sqrt()
    } else {
        (-2.0 * (1.0 - p).ln()).sqrt()
    };
    if (p - 0.5).abs() < 0.3 {
        x = (p - 0.5) * (2.0 * PI).sqrt();
    }
    for _ in 0..100 {
        let step = (normal_cdf(x) - p) / normal_pdf(x);
        x -= step;
        if step.abs() < 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_and_quantile() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(-1.959_963_984_540_054) - 0.025).abs() < 1e-15);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((normal_quantile(0.5)).abs() < 1e-15);
    }

    #[test]
    fn symmetry_on_grid() {
        for i in -80..=80 {
            let x = i as f64 * 0.1;
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-15, "x = {x}");
        }
    }

    #[test]
    fn log_cdf_tail_is_continuous() {
        let a = ln_normal_cdf(-29.999_999);
        let b = ln_normal_cdf(-30.000_001);
        assert!((a - b).abs() < 1e-4);
        assert!(ln_normal_cdf(-60.0).is_finite());
    }
}
