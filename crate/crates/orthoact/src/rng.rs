//! Seeded counter-based pseudo-random generator.
//!
//! Every draw is a pure function of `(seed, counter)`, so sample `i` of a
//! stream is the same no matter how the stream is chunked across workers.
//! The mixer is SplitMix64; normals come from Box-Muller.

use std::f64::consts::TAU;

/// Stateless counter-based generator. Cloning or re-creating with the same
/// seed reproduces the exact same stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    /// Derive an independent stream, e.g. one per shard or per epoch.
    pub fn substream(&self, index: u64) -> Self {
        CounterRng {
            seed: mix(self.seed ^ mix(index)),
        }
    }

    pub fn bits(&self, counter: u64) -> u64 {
        mix(self.seed.wrapping_add(counter.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
    }

    /// Uniform in the half-open interval (0, 1].
    pub fn uniform_oc(&self, counter: u64) -> f64 {
        let u = self.bits(counter) >> 11; // 53 bits
        (u as f64 + 1.0) / 9_007_199_254_740_992.0
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&self, counter: u64, lo: f64, hi: f64) -> f64 {
        let u = (self.bits(counter) >> 11) as f64 / 9_007_199_254_740_992.0;
        lo + (hi - lo) * u
    }

    /// Standard normal via Box-Muller; draw `i` consumes counters `2i` and `2i+1`.
    pub fn normal(&self, index: u64) -> f64 {
        let u1 = self.uniform_oc(2 * index);
        let u2 = self.uniform_oc(2 * index + 1);
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    /// Deterministic Fisher-Yates shuffle of `items`, consuming one counter per swap.
    pub fn shuffle<T>(&self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = (self.bits(i as u64) % (i as u64 + 1)) as usize;
            items.swap(i, j);
        }
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
