//! Seed and substream discipline.
//!
//! Every stochastic stage derives its own ChaCha substream from the run seed,
//! a stage name and an index (slice number, detector arm, phase step, ...).
//! Adding or reordering stages never perturbs the draws of another stage, and
//! results are independent of thread count because no generator is shared.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stable 64-bit hash of a stage name (FNV-1a).
fn hash_name(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// splitmix64 finalizer, used to spread (name, index) into a stream id.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for substream `(name, index)` of run seed `seed`.
pub fn substream(seed: u64, name: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(mix(hash_name(name) ^ mix(index)));
    rng
}

/// Draw from Exp(mean) by inversion. `u` must come from `random::<f64>()`,
/// which lies in [0, 1); `1 - u` keeps the log argument strictly positive.
#[inline]
pub fn exp_sample(rng: &mut impl rand::Rng, mean: f64) -> f64 {
    let u: f64 = rng.random();
    -mean * (1.0 - u).ln()
}
