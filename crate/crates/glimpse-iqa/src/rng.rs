//! Seed derivation and sampling helpers.
//!
//! Every random draw in the crate goes through a ChaCha8 generator seeded
//! deterministically from a master seed plus a tag path, so the training
//! trajectory is a pure function of (seed, config, data) no matter how the
//! work is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; used to mix tag words into derived seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives an independent generator from a master seed and a tag path,
/// e.g. `stream(seed, &[epoch, batch, item])`.
pub fn stream(master: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut s = splitmix64(master ^ 0x6a09_e667_f3bc_c908);
    for &t in tags {
        s = splitmix64(s ^ t.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    ChaCha8Rng::seed_from_u64(s)
}

/// One standard-normal pair via Box-Muller.
pub fn normal_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    // u1 in (0, 1] so the log is finite.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Uniform draw from [-1, 1].
pub fn uniform_pm1<R: Rng>(rng: &mut R) -> f64 {
    rng.gen::<f64>() * 2.0 - 1.0
}
