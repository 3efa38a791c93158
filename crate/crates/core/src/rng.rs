//! Seed derivation. Every stochastic step in the crate draws from a
//! `ChaCha8Rng` whose seed is derived from a base seed plus a path of
//! integer labels, so that runs are reproducible regardless of call order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `labels` into `seed`.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix(seed), |acc, &l| splitmix(acc ^ splitmix(l)))
}

pub fn rng_from(seed: u64, labels: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, labels))
}
