//! Seed derivation.
//!
//! Every random draw in a simulation comes from a ChaCha8 stream seeded by
//! mixing the run seed with a fixed stream tag. Per-run seeds are derived from
//! the master seed the same way, so `(master_seed, run_index, tag)` pins every
//! stream independently of how many draws any other stream consumes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer (Steele, Lea & Flood), a bijective 64-bit avalanche mixer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `mix(a, b) = splitmix64(a ^ splitmix64(b))`.
pub fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Seed of run `run_index` within a batch.
pub fn run_seed(master_seed: u64, run_index: u64) -> u64 {
    mix(master_seed, run_index)
}

/// Independent sub-streams of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Initial interest and drift of every item, drawn in item-id order.
    Items = 0x1001,
    Clicks = 0x1002,
    Noise = 0x1003,
    /// Thompson draws and Random-policy subsets.
    Policy = 0x1004,
}

pub fn stream(seed: u64, stream: Stream) -> SimRng {
    SimRng::seed_from_u64(mix(seed, stream as u64))
}

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
