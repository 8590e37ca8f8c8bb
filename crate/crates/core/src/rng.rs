//! Seeded random streams.
//!
//! Every consumer of randomness derives its own stream from the master seed and a
//! (purpose, index) pair, so results do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Named purposes for derived streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    WorldData = 2,
    Synthetic = 3,
    ModelTrain = 4,
    ValueFit = 5,
    Evaluation = 6,
    ModelInit = 7,
    Diagnose = 8,
    Sweep = 9,
}

pub fn derive_seed(seed: u64, purpose: Stream, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64((purpose as u64) ^ splitmix64(index)))
}

pub fn stream(seed: u64, purpose: Stream, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, purpose, index))
}

pub fn from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
