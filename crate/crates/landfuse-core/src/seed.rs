//! Deterministic seed derivation.
//!
//! Every randomized stage draws from a ChaCha stream seeded through
//! [`derive_seed`], which mixes the master seed with a stage name and an
//! index. The derivation is fixed so that a replay — including one written
//! in another language — reproduces the same stage seeds:
//!
//! ```text
//! derive_seed(master, stage, index)
//!     = splitmix64( splitmix64( master ^ fnv1a64(stage) ) ^ index )
//! ```
//!
//! with the standard SplitMix64 finalizer and 64-bit FNV-1a over the UTF-8
//! bytes of `stage`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 mixing step (Steele, Lea & Flood 2014).
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xCBF2_9CE4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

/// Derive the seed for a named stage and run/unit index from a master seed.
pub fn derive_seed(master: u64, stage: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a64(stage.as_bytes())) ^ index)
}

/// ChaCha stream for a named stage. All randomized operations in this crate
/// take their RNG from here so runs are reproducible bit-for-bit.
pub fn stage_rng(master: u64, stage: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stage, index))
}
