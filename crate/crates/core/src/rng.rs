//! Seeded random streams.
//!
//! Every random quantity in the crate comes from a ChaCha8 generator
//! (`rand_chacha::ChaCha8Rng`), which produces the same sequence on every
//! platform. A single user seed is split into independent streams by
//! purpose so that, for example, drawing more shots never shifts the
//! instances that get generated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a random stream is used for. The discriminant selects the ChaCha
/// stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Instances = 1,
    Shots = 2,
    Perturbation = 3,
}

/// Generator for `purpose` derived from `seed`, further split by `index`
/// (an instance id, reduction step, edge number...).
pub fn stream(seed: u64, purpose: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, index));
    rng.set_stream(purpose as u64);
    rng
}

/// SplitMix64 finaliser applied to `seed ^ golden * (index + 1)`.
pub fn mix(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
