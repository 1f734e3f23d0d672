//! Shared numerical kernels.

mod bessel;
mod normal;
mod quadrature;
mod rng;

pub use bessel::{bessel_i, bessel_i_scaled, ln_bessel_i_scaled, SERIES_LIMIT};
pub use normal::{ln_normal_cdf, normal_cdf, normal_pdf, normal_quantile};
pub use quadrature::{adaptive_quadrature, QuadratureConfig, QuadratureResult};
pub use rng::{exponential, open_unit, rng_stream, StreamRng};
