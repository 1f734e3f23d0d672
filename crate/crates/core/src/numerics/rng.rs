//! Keyed random streams.
//!
//! A stream is ChaCha8 seeded from `seed` with the 64-bit stream id set to
//! `stream_index`, so the sequence depends only on the pair and not on which
//! thread draws it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn rng_stream(seed: u64, stream_index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_index);
    rng
}

/// Uniform on (0, 1].
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Exponential variate with the given mean, by inversion.
#[inline]
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    -open_unit(rng).ln() * mean
}
