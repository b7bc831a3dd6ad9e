use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded generator behind every synthetic source.
///
/// The algorithm is fixed: ChaCha with 8 rounds (`rand_chacha::ChaCha8Rng`),
/// keyed through `SeedableRng::seed_from_u64`. A uniform draw takes the top
/// 53 bits of one `next_u64` output, so a given seed produces the same
/// decisions on every platform.
#[derive(Debug, Clone)]
pub struct DecisionRng {
    inner: ChaCha8Rng,
}

impl DecisionRng {
    pub fn seeded(seed: u64) -> Self {
        DecisionRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform in [0, 1).
    pub fn next_unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// True with probability `p`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_unit() < p
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

/// Mixes a master seed with a stream index (SplitMix64 finaliser) so that
/// derived streams are decorrelated.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
