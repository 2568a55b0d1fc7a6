//! Seeded, splittable random streams.
//!
//! Every randomized routine takes a base seed plus a stream id so that
//! per-sample work can be reordered or parallelised without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Independent stream `stream` derived from `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids reserved for distinct purposes within one run.
pub mod purpose {
    pub const INIT: u64 = 1;
    pub const BATCH: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const SHOTS: u64 = 4;
    pub const SAMPLES: u64 = 1 << 32;
}

/// Mix two values into a fresh 64-bit seed (splitmix64 finaliser).
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
