//! Seeding. Every random stream is a ChaCha8 generator whose seed is derived
//! from a master seed and a stream index, so parallel work produces the same
//! numbers no matter how it is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer applied to `master` mixed with `stream`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw on `(lo, hi]`; never returns `lo`, which keeps draws for
/// positive parameters with a zero lower limit strictly positive.
pub fn uniform_open_lo<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    let v = lo + (hi - lo) * u;
    v.min(hi)
}
