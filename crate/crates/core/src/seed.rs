//! Deterministic seed derivation.
//!
//! Every component that needs randomness gets its own stream derived from
//! the run seed and a stable index (point index, epoch, pass number). This
//! keeps results independent of scheduling: a worker pool can score points
//! in any order and still reproduce the single-threaded output bit for bit.

/// SplitMix64 output function. Small, well mixed, and stable; used only for
/// seed derivation, never as the sampling generator itself.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed for stream `index` of run `seed`.
pub fn derive(seed: u64, index: u64) -> u64 {
    // Mix the index first so (seed, 0) and (seed+1, ...) streams never line up.
    splitmix64(seed ^ splitmix64(index))
}
