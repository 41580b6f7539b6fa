//! Keyed, counter-based random streams.
//!
//! Every trial owns a ChaCha8 stream addressed by `(master_seed, stream)`.
//! Streams are independent of the order in which trials run, so parallel
//! execution reproduces sequential results bit for bit.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::special::normal_quantile;

/// Hypothesis tag occupying the top two bits of a stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Hypothesis {
    Null,
    Alternative,
}

const TRIAL_MASK: u64 = (1 << 62) - 1;

/// Stream id for `(hypothesis, trial_index)`. Trial indices must fit in 62 bits.
pub fn stream_id(hypothesis: Hypothesis, trial: u64) -> u64 {
    let tag = match hypothesis {
        Hypothesis::Null => 1u64,
        Hypothesis::Alternative => 2u64,
    };
    (tag << 62) | (trial & TRIAL_MASK)
}

/// SplitMix64 finalizer, used to derive child seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SampleStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl SampleStream {
    pub fn keyed(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval `(0, 1)`: 53 random bits, offset by half an ulp.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by inverse CDF of [`Self::uniform_open`].
    pub fn standard_normal(&mut self) -> f64 {
        normal_quantile(self.uniform_open())
    }
}
