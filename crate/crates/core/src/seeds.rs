//! Counter-based seed derivation.
//!
//! Every randomized routine draws from `ChaCha8Rng` seeded by
//! `(master seed, stream, index)`, so results are independent of thread
//! count and trial scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_SURVEY: u64 = 1;
pub const STREAM_C_INFINITY: u64 = 2;
pub const STREAM_WARM_START: u64 = 3;
pub const STREAM_KAPPA: u64 = 4;
pub const STREAM_BARRIER: u64 = 5;
pub const STREAM_TD: u64 = 6;
pub const STREAM_ROUND_TRIP: u64 = 7;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index)
}

pub fn rng_for(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}
