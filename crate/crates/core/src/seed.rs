//! Seed derivation for independent, reproducible RNG streams.
//!
//! Every random stream in a run (per-agent streams, placement, phases,
//! message loss) is a `ChaCha8Rng` seeded through [`mix`], so a run is a
//! pure function of its 64-bit seed. The experiment harness derives one
//! seed per (cell, replicate) pair with the same mixer.

/// SplitMix64 output mixer. A bijection on `u64`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a `(hi, lo)` pair.
///
/// For fixed `seed`, distinct `(hi, lo)` pairs with `hi, lo < 2^32` map to
/// distinct outputs: the pair is packed into one word and passed through
/// bijections only.
pub fn mix(seed: u64, hi: u64, lo: u64) -> u64 {
    debug_assert!(hi < (1 << 32) && lo < (1 << 32));
    splitmix64(seed ^ splitmix64((hi << 32) | lo))
}

/// Stream ids used by the engine; kept distinct so the streams never alias.
pub const STREAM_AGENT: u64 = 1;
pub const STREAM_PLACEMENT: u64 = 2;
pub const STREAM_PHASE: u64 = 3;
pub const STREAM_LOSS: u64 = 4;
pub const STREAM_WALKER: u64 = 5;
