//! Counter-based random numbers.
//!
//! Samplers and initializers derive every value from a (seed, counter) pair through
//! the SplitMix64 finalizer. There is no mutable generator state, so a point set is
//! a pure function of its seed: identical across platforms, thread counts, and call
//! orders. The algorithm name is recorded in run reports.

pub const ALGORITHM: &str = "splitmix64-counter";

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Stateless generator addressed by counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    /// Independent stream for a named role ("interior", "init", ...). Streams with
    /// different names never share counters with each other or with the parent.
    pub fn stream(self, role: &str) -> Self {
        CounterRng {
            seed: mix64(self.seed ^ mix64(fnv1a(role.as_bytes()))),
        }
    }

    #[inline]
    pub fn bits_at(self, i: u64) -> u64 {
        mix64(self.seed.wrapping_add(i.wrapping_add(1).wrapping_mul(GAMMA)))
    }

    /// Uniform on [0, 1) with 53 random bits.
    #[inline]
    pub fn u01_at(self, i: u64) -> f64 {
        (self.bits_at(i) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn uniform_at(self, i: u64, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.u01_at(i)
    }

    /// Uniform on [-bound, bound].
    #[inline]
    pub fn symmetric_at(self, i: u64, bound: f64) -> f64 {
        self.uniform_at(i, -bound, bound)
    }

    /// Uniform integer in 0..n via 53-bit mantissa scaling; n must be small
    /// relative to 2^53 (face picks, index draws).
    #[inline]
    pub fn index_at(self, i: u64, n: usize) -> usize {
        debug_assert!(n > 0);
        let k = (self.u01_at(i) * n as f64) as usize;
        k.min(n - 1)
    }
}
