//! Seed derivation for the counter-based random streams used everywhere.
//!
//! Every stochastic draw in the library comes from a `ChaCha8Rng` seeded by
//! mixing a root seed with stream tags and counters (round, subtask, arm).
//! This makes each draw a pure function of its coordinates: runs replay
//! bit-identically, and under `compare` two policies facing the same seed
//! see the same queries and noise regardless of which arms they pick.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keeping the derived seed spaces disjoint.
pub mod stream {
    pub const QUERY: u64 = 0x01;
    pub const QUERY_TOKENS: u64 = 0x02;
    pub const NOISE: u64 = 0x03;
    pub const OUTPUT_JITTER: u64 = 0x04;
    pub const DESCRIPTION: u64 = 0x05;
    pub const HIDDEN: u64 = 0x06;
    pub const TRANSFORM: u64 = 0x07;
    pub const BIAS_DIR: u64 = 0x08;
    pub const POLICY: u64 = 0x09;
    pub const NET_INIT: u64 = 0x0a;
    pub const TIE_BREAK: u64 = 0x0b;
    pub const RANDOM_POLICY: u64 = 0x0c;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds the parts into one well-mixed 64-bit seed.
pub fn mix(parts: &[u64]) -> u64 {
    let mut state = 0x243f_6a88_85a3_08d3; // fractional digits of pi
    let mut out = 0;
    for &p in parts {
        state ^= p;
        out = splitmix64(&mut state);
    }
    out
}

/// FNV-1a hash of a text tag, for seeding embeddings from labels.
pub fn hash_tag(tag: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// The deterministic generator for a derived seed.
pub fn chacha(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
