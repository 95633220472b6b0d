//! Seeded random streams.
//!
//! Every stochastic task derives its own seed from the master seed and a
//! tuple of integer ids, so results do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable hash of `(master, ids...)`.
pub fn derive_seed(master: u64, ids: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ 0x6A09_E667_F3BC_C908);
    for &id in ids {
        h = splitmix64(h ^ splitmix64(id.wrapping_add(0x3C6E_F372_FE94_F82B)));
    }
    h
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream tags keep different uses of the same ids apart.
pub(crate) mod stream {
    pub const PARENT: u64 = 1;
    pub const SAMPLE: u64 = 2;
    pub const UNCOND: u64 = 3;
    pub const COX: u64 = 4;
    pub const JITTER: u64 = 5;
    pub const PROBE: u64 = 6;
}
