//! Globally adaptive Gauss–Kronrod (10/21) quadrature.
//!
//! The interval with the largest error estimate is bisected until the total
//! estimate meets the tolerance. Ties are broken by position so the
//! subdivision schedule is a pure function of the integrand.

use serde::{Deserialize, Serialize};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_525_634,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod abscissae.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Tolerances for [`adaptive_quadrature`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-10,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureConfig {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Self {
        Self {
            rel_tol,
            abs_tol,
            max_subdivisions,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_subdivisions >= 1
    }

    /// Same limits with both tolerances tightened by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

/// Single 21-point Kronrod evaluation with the embedded Gauss error estimate.
fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_k = f_center * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let h = half.abs();
    let value = res_k * half;
    let error = rescale_error((res_k - res_g) * half, res_abs * h, res_asc * h);
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]`.
///
/// Nodes never touch the endpoints, so integrable endpoint singularities are
/// tolerated. When `max_subdivisions` is exhausted the best estimate is
/// returned with `converged == false`; the caller decides what to do.
pub fn adaptive_quadrature<F>(mut f: F, a: f64, b: f64, config: &QuadratureConfig) -> QuadratureResult
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return QuadratureResult {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
            converged: true,
        };
    }

    let mut segments = vec![gk21(&mut f, a, b)];
    let mut subdivisions = 1;
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let target = config.abs_tol.max(config.rel_tol * value.abs());
        if !value.is_finite() {
            return QuadratureResult {
                value,
                error: f64::INFINITY,
                subdivisions,
                converged: false,
            };
        }
        if error <= target || subdivisions >= config.max_subdivisions {
            return QuadratureResult {
                value,
                error,
                subdivisions,
                converged: error <= target,
            };
        }

        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, be), (i, s)| {
                if s.error > be {
                    (i, s.error)
                } else {
                    (bi, be)
                }
            });
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a.min(seg.b) || mid >= seg.a.max(seg.b) {
            // interval exhausted at machine resolution
            segments.push(Segment { error: 0.0, ..seg });
            continue;
        }
        let left = gk21(&mut f, seg.a, mid);
        let right = gk21(&mut f, mid, seg.b);
        segments.push(left);
        segments.push(right);
        // keep left-to-right order so ties resolve identically run to run
        segments.sort_by(|x, y| x.a.total_cmp(&y.a));
        subdivisions += 1;
    }
}
