//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a 64-bit
//! value. Child streams (one per model term, one per bootstrap replicate) get
//! their seed from [`derive_seed`], which mixes the parent seed and the child
//! index through two rounds of the SplitMix64 finalizer:
//!
//! ```text
//! derive_seed(master, index) = mix(master ^ mix(index + 0x9E3779B97F4A7C15))
//! ```
//!
//! The scheme is part of the reproducibility contract: changing it changes
//! every simulated path.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of child stream `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(GOLDEN)))
}

/// Seed derived along a path of indices, e.g. `[replicate, term]`.
pub fn derive_path(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |seed, &i| derive_seed(seed, i))
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
