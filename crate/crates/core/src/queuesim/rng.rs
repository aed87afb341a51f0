//! Seed derivation.
//!
//! Every run seeds ChaCha8 from a 64-bit run seed. Independent processes
//! inside a run use distinct ChaCha stream ids on the same key:
//!
//! | stream id            | process                          |
//! |----------------------|----------------------------------|
//! | `1 << 32 | flow`     | Poisson arrivals of a commodity  |
//! | `2 << 32 | flow`     | path choice of a commodity       |
//! | `3 << 32 | station`  | service times of a station       |
//!
//! Replication seeds come from [`split_seed`], a SplitMix64 step over the
//! base seed offset by the replication index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

pub(crate) const ARRIVAL_STREAM: u64 = 1 << 32;
pub(crate) const ROUTING_STREAM: u64 = 2 << 32;
pub(crate) const SERVICE_STREAM: u64 = 3 << 32;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `index` derived from `base`.
pub fn split_seed(base: u64, index: u64) -> u64 {
    splitmix64(base.wrapping_add(index.wrapping_mul(GOLDEN_GAMMA)))
}

pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
