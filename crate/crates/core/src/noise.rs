//! Counter-based Gaussian increments.
//!
//! Increment `k` of a stream is a pure function of `(seed, k)`, so paths can
//! be scheduled on any number of workers in any order.

use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one seed; order matters.
#[inline]
pub fn derive_seed(words: &[u64]) -> u64 {
    words.iter().fold(0x243f_6a88_85a3_08d3, |acc, &w| {
        mix64(acc.wrapping_add(GOLDEN_GAMMA) ^ mix64(w.wrapping_add(GOLDEN_GAMMA)))
    })
}

/// Uniform words `mix64(key + i·γ)`; used only to feed one normal draw.
struct Draw {
    key: u64,
    i: u64,
}

impl RngCore for Draw {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.i = self.i.wrapping_add(1);
        mix64(self.key.wrapping_add(self.i.wrapping_mul(GOLDEN_GAMMA)))
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    pub seed: u64,
    pub counter: u64,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        NoiseStream { seed, counter: 0 }
    }

    /// Standard normal number `counter` of this stream.
    #[inline]
    pub fn normal_at(&self, counter: u64) -> f64 {
        let mut draw = Draw {
            key: mix64(self.seed ^ mix64(counter.wrapping_mul(GOLDEN_GAMMA))),
            i: 0,
        };
        StandardNormal.sample(&mut draw)
    }

    /// Next Wiener increment with variance `dtheta`.
    #[inline]
    pub fn increment(&mut self, dtheta: f64) -> f64 {
        let z = self.normal_at(self.counter);
        self.counter += 1;
        z * libm::sqrt(dtheta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increments_depend_only_on_seed_and_counter() {
        let mut a = NoiseStream::new(42);
        let seq: alloc::vec::Vec<f64> = (0..100).map(|_| a.increment(0.01)).collect();
        let b = NoiseStream::new(42);
        for (k, x) in seq.iter().enumerate() {
            assert_eq!(x.to_bits(), (b.normal_at(k as u64) * 0.1).to_bits());
        }
        assert_ne!(NoiseStream::new(43).normal_at(0), b.normal_at(0));
    }

    #[test]
    fn seeds_are_order_sensitive() {
        assert_ne!(derive_seed(&[1, 2, 3]), derive_seed(&[3, 2, 1]));
        assert_ne!(derive_seed(&[0, 0]), derive_seed(&[0]));
        assert_eq!(derive_seed(&[7, 8]), derive_seed(&[7, 8]));
    }

    #[test]
    fn normals_have_unit_moments() {
        let s = NoiseStream::new(2024);
        let n = 200_000;
        let (mut m1, mut m2, mut m4) = (0.0, 0.0, 0.0);
        for k in 0..n {
            let z = s.normal_at(k);
            m1 += z;
            m2 += z * z;
            m4 += z * z * z * z;
        }
        let n = n as f64;
        assert!((m1 / n).abs() < 4.0 / n.sqrt());
        assert!((m2 / n - 1.0).abs() < 4.0 * (2.0 / n).sqrt());
        assert!((m4 / n - 3.0).abs() < 4.0 * (96.0 / n).sqrt());
    }

    #[test]
    fn neighbouring_streams_are_uncorrelated() {
        let n = 100_000;
        let (a, b) = (NoiseStream::new(derive_seed(&[1, 5])), NoiseStream::new(derive_seed(&[1, 6])));
        let c: f64 = (0..n).map(|k| a.normal_at(k) * b.normal_at(k)).sum::<f64>() / n as f64;
        assert!(c.abs() < 4.0 / (n as f64).sqrt());
    }
}
