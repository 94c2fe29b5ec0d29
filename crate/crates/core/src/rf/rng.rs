//! Keyed RNG streams. Every random draw in training, importance and tuning
//! comes from a stream keyed by (master seed, purpose, indices), so results do
//! not depend on which thread runs which tree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const BOOTSTRAP: u64 = 1;
pub(crate) const PERMUTATION: u64 = 2;
pub(crate) const FOLDS: u64 = 3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn stream(seed: u64, purpose: u64, keys: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix64(seed ^ splitmix64(purpose));
    for &k in keys {
        state = splitmix64(state ^ splitmix64(k));
    }
    ChaCha8Rng::seed_from_u64(state)
}
