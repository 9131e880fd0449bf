//! Seeded, portable random numbers.
//!
//! The generator is ChaCha8 (`rand_chacha`), whose output is specified
//! independently of platform and word size. A run derives every random
//! quantity from one 64-bit seed by splitting it into numbered streams:
//! stream `s` of seed `x` is ChaCha8 keyed by `seed_from_u64(x)` with its
//! stream counter set to `s`. Streams never overlap, so adding draws to one
//! consumer (say, batch shuffling) never perturbs another (initialization).

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Named stream identifiers. The numeric values are part of the determinism contract.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    /// Parameter initialization.
    Init = 1,
    /// Train/test partition.
    Split = 2,
    /// Per-epoch batch order.
    Batches = 3,
    /// Synthetic data generation.
    Data = 4,
    /// Perturbations in property checks.
    Perturb = 5,
}

#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    /// Stream 0 of `seed`.
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn stream(seed: u64, stream: Stream) -> Self {
        Self::with_stream(seed, stream as u64)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    /// A fresh generator on another stream of the same seed.
    pub fn fork(&self, stream: Stream) -> Self {
        Self::stream(self.seed, stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.gen::<u64>() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[low, high)`.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.next_f64()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.gen()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_are_distinct() {
        let mut a = Rng::stream(7, Stream::Init);
        let mut b = Rng::stream(7, Stream::Split);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn known_prefix_is_stable() {
        // Frozen from the first release; a change here breaks run reproducibility.
        assert_eq!(Rng::new(0).next_u64(), 13_080_132_717_333_068_652);
        assert_eq!(Rng::stream(0, Stream::Init).next_u64(), 13_937_087_304_575_520_531);
        assert_eq!(Rng::new(0).fork(Stream::Init).stream_id(), 1);
    }

    #[test]
    fn uniform_stays_in_range() {
        let mut r = Rng::new(3);
        for _ in 0..10_000 {
            let v = r.uniform(-0.5, 0.5);
            assert!((-0.5..0.5).contains(&v));
        }
    }

    #[test]
    fn permutation_covers_every_index() {
        let mut r = Rng::new(11);
        let mut p = r.permutation(50);
        p.sort_unstable();
        assert_eq!(p, (0..50).collect::<Vec<_>>());
    }
}
