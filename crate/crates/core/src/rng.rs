//! Deterministic pseudo-random numbers for scenario generation and tests.
//!
//! The generator is SplitMix64 (Steele, Lea & Flood, "Fast splittable
//! pseudorandom number generators", OOPSLA 2014), the same mixer used to seed
//! `java.util.SplittableRandom` and the xoshiro family. It was picked over a
//! heavier PRNG on purpose: the whole algorithm is three shift-xor-multiply
//! lines, so any other implementation (Python, C, a spreadsheet) can replay a
//! stream from the seed and reproduce golden files byte for byte.
//!
//! Derived draws are equally pinned down:
//!
//! * `next_f64` maps the top 53 bits onto `[0, 1)`.
//! * `next_gaussian` is the Box-Muller transform over two uniform draws
//!   (no rejection loops, so the draw count per sample is fixed).

use libm::{cos, log, sqrt};

/// SplitMix64 stream; the state advances by the 64-bit golden gamma.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Next 64 uniform bits.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)` with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal draw via Box-Muller; consumes exactly two `u64`s.
    pub fn next_gaussian(&mut self) -> f64 {
        // Shift the first uniform into (0, 1] so the log is finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        sqrt(-2.0 * log(u1)) * cos(2.0 * core::f64::consts::PI * u2)
    }

    /// Bernoulli draw with success probability `p`.
    pub fn next_bool(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}
