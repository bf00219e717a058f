//! Counter-based, splittable random streams.
//!
//! A stream is the ChaCha20 keystream keyed by the 64-bit seed (little-endian,
//! zero padded to 32 bytes) with the 64-bit `stream_id` as ChaCha nonce. Two
//! streams with equal `(seed, stream_id)` produce bit-identical sequences on
//! every platform, and distinct stream ids give independent sequences, so
//! parallel work is made reproducible by deriving one stream per work item.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Identifier recorded in run manifests.
pub const RNG_ALGORITHM: &str = "chacha20/le64-seed/stream-nonce/u53-float";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    core: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut core = ChaCha20Rng::from_seed(key);
        core.set_stream(stream_id);
        Self { seed, stream_id, core }
    }

    /// Fresh stream with the same seed and a stream id mixed from this
    /// stream's id and `parts`.
    pub fn derive(&self, parts: &[u64]) -> Self {
        Self::new(self.seed, derive_stream_id(self.stream_id, parts))
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.core.get_word_pos()
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.core.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard exponential variate.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -libm::log(self.uniform_open0())
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a base stream id and a list of indices.
pub fn derive_stream_id(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(base), |h, &p| splitmix64(h ^ splitmix64(p)))
}
