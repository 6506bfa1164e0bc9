//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! seeded from a base seed mixed with a stream-specific key, so results do
//! not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a numeric key.
pub fn derive_seed(base: u64, key: u64) -> u64 {
    splitmix64(splitmix64(base) ^ key.rotate_left(17) ^ 0xD6E8_FEB8_6659_FD93)
}

/// Mixes a base seed with a string key (FNV-1a of the key).
pub fn derive_seed_str(base: u64, key: &str) -> u64 {
    let h = key.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01B3));
    derive_seed(base, h)
}

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
