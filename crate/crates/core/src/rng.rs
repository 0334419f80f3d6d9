//! Counter-based randomness.
//!
//! Every random quantity in the crate is a pure function of a 64-bit seed and
//! a counter, so configurations and trials can be generated in any order and
//! on any number of threads with bit-identical results.
//!
//! The mixing function is the SplitMix64 output finalizer (Steele, Lea and
//! Flood, 2014). A stream is keyed by `mix64(seed + stream * GAMMA)` and the
//! value at counter `c` is `mix64(key + c * GAMMA)`, which is exactly the
//! SplitMix64 sequence started from `key`. These constants are part of the
//! reproducibility contract and must not change.

/// Weyl increment of SplitMix64 (odd, so `c * GAMMA` is a bijection on `u64`).
pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

const TWO_POW_53: f64 = (1u64 << 53) as f64;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key of stream `stream` under `seed`.
#[inline]
pub fn stream_key(seed: u64, stream: u64) -> u64 {
    mix64(seed.wrapping_add(stream.wrapping_mul(GAMMA)))
}

/// Raw 64-bit value at position `counter` of a keyed stream.
#[inline]
pub fn stream_value(key: u64, counter: u64) -> u64 {
    mix64(key.wrapping_add(counter.wrapping_mul(GAMMA)))
}

/// The 53-bit integer `k` in `1..=2^53` such that the uniform variate is `k / 2^53`.
#[inline]
pub fn unit_numerator(raw: u64) -> u64 {
    (raw >> 11) + 1
}

/// Uniform variate in `(0, 1]`.
#[inline]
pub fn unit_uniform(raw: u64) -> f64 {
    unit_numerator(raw) as f64 / TWO_POW_53
}

/// Integer threshold `t` with `unit_uniform(raw) <= p  <=>  unit_numerator(raw) <= t`.
///
/// `p * 2^53` is exact in `f64`, so the comparison is bit-identical to the
/// floating-point definition.
#[inline]
pub fn open_threshold(p: f64) -> u64 {
    (p * TWO_POW_53).floor() as u64
}

/// Seed for a sub-computation identified by `parts`, e.g. `(n, trial)`.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(master ^ 0x5045_5243_4C41_4221), |acc, &part| {
            stream_value(acc, part)
        })
}

/// Sequential SplitMix64 generator for auxiliary draws (test noise, shuffles).
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform in `(0, 1]`.
    pub fn next_f64(&mut self) -> f64 {
        unit_uniform(self.next_u64())
    }

    /// Uniform integer in `0..bound` (`bound > 0`), by rejection.
    pub fn below(&mut self, bound: u64) -> u64 {
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }
}
