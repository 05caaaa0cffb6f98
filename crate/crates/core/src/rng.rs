//! Self-contained deterministic random number generation.
//!
//! Shuffles, weight initialization, and synthetic data all flow through one
//! generator so that a fixed seed reproduces bit-identical results on any
//! platform, independent of external crate versions. The generator is
//! xoshiro256++ (Blackman & Vigna), seeded through the SplitMix64 finalizer;
//! both algorithms are fully specified by the constants below.

use std::f64::consts::TAU;

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: one step of state advance plus output mixing.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for substream `stream` of `seed`.
///
/// Used for per-clip and per-epoch generators so that work can be
/// reordered or parallelized without changing any output.
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream.wrapping_add(SPLITMIX_GAMMA)))
}

/// xoshiro256++ generator.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
    /// Unused half of the last Box-Muller pair.
    spare_normal: Option<f64>,
}

impl Rng {
    /// Seeds the state by running SplitMix64 from `seed`, as recommended by
    /// the xoshiro authors.
    pub fn new(seed: u64) -> Rng {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_add(SPLITMIX_GAMMA);
            mix64(state)
        };
        let mut s = [next(), next(), next(), next()];
        if s == [0, 0, 0, 0] {
            // the all-zero state is the one fixed point of xoshiro
            s[0] = SPLITMIX_GAMMA;
        }
        Rng {
            s,
            spare_normal: None,
        }
    }

    /// Generator for substream `stream` of `seed`; see [`stream_seed`].
    pub fn from_stream(seed: u64, stream: u64) -> Rng {
        Rng::new(stream_seed(seed, stream))
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform f64 in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / 9_007_199_254_740_992.0; // 2^-53
        (self.next_u64() >> 11) as f64 * SCALE
    }

    /// Uniform integer in [0, bound) without modulo bias (rejection sampling).
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % bound;
            }
        }
    }

    /// Uniform f64 in [lo, hi).
    pub fn next_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal deviate via the Box-Muller transform. Each pair of
    /// uniforms yields two deviates; the second is handed out on the next
    /// call.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        const SCALE: f64 = 1.0 / 9_007_199_254_740_992.0; // 2^-53
        // u1 in (0, 1] keeps the logarithm finite
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * SCALE;
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = TAU * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
