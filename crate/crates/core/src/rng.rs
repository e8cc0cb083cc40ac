//! Seed derivation.
//!
//! Every stochastic component draws from its own ChaCha stream whose seed is
//! a SplitMix64 hash of the run seed and a path of integers (stage tag,
//! epoch, sentence id, pass index, ...). Streams are therefore independent of
//! execution order, which keeps parallel scoring reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TclRng = ChaCha8Rng;

/// Stream tags used by the training pipeline.
pub mod tag {
    pub const TEACHER_INIT: u64 = 0x7465_6163;
    pub const TEACHER_EPOCH: u64 = 0x7465_6570;
    pub const STUDENT_INIT: u64 = 0x7374_7564;
    pub const STUDENT_EPOCH: u64 = 0x7374_6570;
    pub const SCORING: u64 = 0x7363_6f72;
    pub const MC_PASS: u64 = 0x6d63_7073;
    pub const RANDOM_METRIC: u64 = 0x726e_646d;
    pub const SYNTH: u64 = 0x7379_6e74;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `seed` together with `path` into a new 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(seed: u64, path: &[u64]) -> TclRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}

/// Maps a hash to `[0, 1)` using its top 53 bits.
#[inline]
pub fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
