//! Seed derivation. Every random stream in the pipeline comes from one root
//! seed mixed with a component tag, so adding a consumer never shifts the
//! draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `(seed, tag)`.
pub fn derive(seed: u64, tag: u64) -> u64 {
    splitmix(splitmix(seed) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Child seed for a string tag plus an index.
pub fn derive_named(seed: u64, name: &str, index: u64) -> u64 {
    let tag = name
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    derive(derive(seed, tag), index)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
