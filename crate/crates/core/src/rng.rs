//! Seedable generator with a fully specified output stream.
//!
//! The raw stream is SplitMix64 seeded directly with the user seed. Floats,
//! Gamma and Dirichlet variates are derived with the fixed recipes below so
//! that ports to other languages reproduce the same draws bit for bit.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub struct PortableRng {
    inner: SplitMix64,
}

impl PortableRng {
    pub fn new(seed: u64) -> Self {
        PortableRng {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    /// Independent stream for sub-task `index` of a run seeded with `seed`.
    /// The stream seed is the first output of a SplitMix64 seeded with
    /// `seed + (index + 1) * 0x9E3779B97F4A7C15`.
    pub fn for_stream(seed: u64, index: u64) -> Self {
        let mixed = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN));
        let mut mixer = SplitMix64::seed_from_u64(mixed);
        Self::new(mixer.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`.
    fn next_open_f64(&mut self) -> f64 {
        1.0 - self.next_f64()
    }

    /// Standard normal via Box-Muller (cosine branch only).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_open_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Gamma(shape, 1) via Marsaglia-Tsang; shapes below one use the
    /// `G(a + 1) * U^(1/a)` boost.
    pub fn next_gamma(&mut self, shape: f64) -> f64 {
        assert!(shape > 0.0, "gamma shape must be positive");
        if shape < 1.0 {
            let g = self.next_gamma(shape + 1.0);
            return g * self.next_open_f64().powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.next_normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.next_open_f64();
            if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
                return d * v;
            }
        }
    }

    /// Symmetric Dirichlet(alpha) over `k` categories.
    pub fn next_dirichlet(&mut self, alpha: f64, k: usize) -> Vec<f64> {
        let mut draws: Vec<f64> = (0..k).map(|_| self.next_gamma(alpha)).collect();
        let total: f64 = draws.iter().sum();
        for d in &mut draws {
            *d /= total;
        }
        draws
    }
}
