//! Seed derivation for reproducible, order-independent random streams.
//!
//! Every replication owns a ChaCha8 generator seeded from
//! `mix(master_seed, index...)`, so results never depend on which worker
//! thread ran which replication.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a master seed and a path of indices into a 64-bit stream seed.
pub fn derive_seed(master_seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master_seed), |h, &i| splitmix64(h ^ splitmix64(i)))
}

pub fn stream(master_seed: u64, path: &[u64]) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(master_seed, path))
}
