//! Seeded randomness for corpus generation.
//!
//! A thin wrapper over ChaCha12 with the few samplers the generator needs,
//! so the value stream depends only on this crate and the seed.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

pub(crate) struct SeededRng(ChaCha12Rng);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(ChaCha12Rng::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform draw in `0..n` (n > 0) via widening multiply.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Bernoulli draw with probability `p` clamped to `[0, 1]`.
    pub fn chance(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            return false;
        }
        if p >= 1.0 {
            return true;
        }
        (self.next_u64() as f64) < p * (u64::MAX as f64)
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }
}
