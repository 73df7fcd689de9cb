//! Deterministic stream derivation.
//!
//! Every random draw in the pipeline comes from a ChaCha stream derived from
//! the master seed plus a domain tag and an index. Streams for different
//! purposes never interleave, so enabling one feature (say, noise) cannot
//! shift the draws of another (say, trajectory waypoints).

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_TRAJECTORY: u64 = 0x54524a; // per-robot waypoint walks
pub const STREAM_SCHEDULE: u64 = 0x534348; // per-slot id assignment and power draws
pub const STREAM_TRACE: u64 = 0x545243; // per-event padding, multipath, noise
pub const STREAM_TREE: u64 = 0x545245; // per-tree bootstrap and feature draws
pub const STREAM_FOLDS: u64 = 0x464c44; // cross-validation shuffle
pub const STREAM_RUN: u64 = 0x52554e; // per-run scenario seeds inside sweeps
pub const STREAM_PATTERN: u64 = 0x504154; // the shared tag bit pattern

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive an independent ChaCha stream from (master seed, domain tag, index).
pub fn derive_stream(master: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut state = master
        ^ domain.wrapping_mul(0xd1b54a32d192ed03)
        ^ index.wrapping_mul(0x8cb92ba72f3d8dd7);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Derive a single u64, for seeding nested scenario configs.
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    let mut state = master
        ^ domain.wrapping_mul(0xd1b54a32d192ed03)
        ^ index.wrapping_mul(0x8cb92ba72f3d8dd7);
    splitmix64(&mut state)
}
