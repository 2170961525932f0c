//! Reproducible random streams.
//!
//! Every stochastic step (fold shuffling, bootstrap draws, per-node feature
//! subsets, SMOTE) draws from a [`DeterministicRng`]. The generator is
//! **ChaCha20** in the original Bernstein layout (64-bit block counter,
//! 64-bit stream id), as implemented by `rand_chacha` 0.3. The 256-bit key is
//! the little-endian seed in bytes 0..8 followed by 24 zero bytes, and the
//! stream id is the ChaCha nonce. `next_u64` returns consecutive 8-byte
//! little-endian words of the keystream, so any ChaCha20 implementation can
//! reproduce a stream given `(seed, stream_id)`.
//!
//! Derived quantities use fixed conversions that do not depend on the `rand`
//! crate's distribution code:
//! - `uniform()` is `(next_u64() >> 11) * 2^-53`, in `[0, 1)`.
//! - `below(n)` rejects draws at or above the largest multiple of `n` and
//!   returns the remainder.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Algorithm identifier recorded in reports and model files.
pub const RNG_ALGORITHM: &str = "chacha20-djb/seed-le64/stream-nonce";

#[derive(Clone, Debug)]
pub struct DeterministicRng {
    seed: u64,
    stream_id: u64,
    inner: ChaCha20Rng,
}

impl DeterministicRng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut inner = ChaCha20Rng::from_seed(key);
        inner.set_stream(stream_id);
        DeterministicRng {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream on the same seed. Does not consume draws from `self`.
    pub fn child(&self, stream_id: u64) -> Self {
        DeterministicRng::new(self.seed, stream_id)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let limit = u64::MAX - (u64::MAX % n + 1) % n;
        loop {
            let x = self.next_u64();
            if x <= limit {
                return (x % n) as usize;
            }
        }
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Mixes a seed with a tag into a new seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
