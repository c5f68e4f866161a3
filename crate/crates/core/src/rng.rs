//! Counter-based pseudo-randomness with explicit streams.
//!
//! All sampling in this crate goes through [`Rng`], a splitmix-style 64-bit
//! generator keyed by a [`Seed`]: a base value plus a stream index. Two `Rng`s
//! built from the same `(base, stream)` pair produce bit-identical output, and
//! distinct streams are statistically independent, which is what lets sweep
//! trials run in parallel while staying byte-reproducible.
//!
//! Gaussian variates use the Box-Muller transform over `(0, 1]` uniforms, so
//! no rejection step perturbs the draw count.

/// Key for a reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed {
    /// Experiment-level seed.
    pub base: u64,
    /// Stream index (trial, restart, sub-channel, ...).
    pub stream: u64,
}

impl Seed {
    pub fn new(base: u64, stream: u64) -> Self {
        Seed { base, stream }
    }

    /// Same base, different stream.
    pub fn with_stream(self, stream: u64) -> Self {
        Seed {
            base: self.base,
            stream,
        }
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// splitmix64 generator with a cached Box-Muller spare.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
    spare_gaussian: Option<f64>,
}

impl Rng {
    pub fn new(seed: Seed) -> Self {
        // Hash base and stream through distinct lanes so that (a, b) and
        // (b, a) key different streams.
        let state = mix(seed.base ^ 0x243F_6A88_85A3_08D3)
            ^ mix(seed.stream ^ 0x1319_8A2E_0370_7344).rotate_left(32);
        Rng {
            state: mix(state),
            spare_gaussian: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform draw in `(0, 1]`; never returns 0, so `ln` of it is finite.
    pub fn uniform(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * ((self.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller; draws two uniforms per pair.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(g) = self.spare_gaussian.take() {
            return g;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_gaussian = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// ±1 with equal probability.
    pub fn rademacher(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform index in `0..n`. Uses the widening-multiply trick; the bias is
    /// below 2^-64 for any n that fits in memory.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}
