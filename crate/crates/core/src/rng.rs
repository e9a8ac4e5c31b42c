//! Seed derivation. Every random stream in the crate is a pure function of
//! the user seed plus a stream tag and an index, so results never depend on
//! the order in which work items are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags keep the split, forest and synthesis generators apart even
/// when they share a base seed and index.
pub mod stream {
    pub const TREE: u64 = 0x7472_6565;
    pub const SPLIT: u64 = 0x7370_6c69;
    pub const FOREST: u64 = 0x666f_7265;
    pub const SYNTH: u64 = 0x7379_6e74;
    pub const CLUSTERS: u64 = 0x636c_7573;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index)
}

pub fn derived_rng(seed: u64, stream: u64, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, stream, index))
}
