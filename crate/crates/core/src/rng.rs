//! Keyed random substreams.
//!
//! Every random quantity in a trial is drawn from a stream derived from
//! `(master_seed, purpose, trial_index)`. The derivation is a pure hash of
//! the key, so trials can be evaluated in any order on any number of
//! workers and still see exactly the same numbers.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

/// What a stream is used for. Distinct purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Purpose {
    Channel,
    Noise,
    Data,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Channel => 0x6368_616e_6e65_6c00,
            Purpose::Noise => 0x6e6f_6973_6500_0000,
            Purpose::Data => 0x6461_7461_0000_0000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub purpose: Purpose,
    pub trial_index: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, purpose: Purpose, trial_index: u64) -> Self {
        Self {
            master_seed,
            purpose,
            trial_index,
        }
    }
}

// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Derives the generator for `key`.
pub fn derive_stream(key: StreamKey) -> RandomStream {
    let h = mix(key.master_seed ^ GOLDEN);
    let h = mix(h ^ key.purpose.tag());
    let h = mix(h.wrapping_add(GOLDEN) ^ key.trial_index);
    let mut seed = [0u8; 32];
    for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
        let word = mix(h.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1)));
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    RandomStream {
        inner: Source::ChaCha(Box::new(ChaCha8Rng::from_seed(seed))),
    }
}

#[derive(Debug, Clone)]
enum Source {
    ChaCha(Box<ChaCha8Rng>),
    Silent,
}

/// Single-owner handle to a stream of i.i.d. uniform 64-bit words.
#[derive(Debug, Clone)]
pub struct RandomStream {
    inner: Source,
}

impl RandomStream {
    /// A stream whose Gaussian draws are all exactly zero and whose raw
    /// words are all zero. Used to switch off noise in tests.
    pub fn silent() -> Self {
        Self {
            inner: Source::Silent,
        }
    }

    pub fn is_silent(&self) -> bool {
        matches!(self.inner, Source::Silent)
    }

    pub fn next_word(&mut self) -> u64 {
        match &mut self.inner {
            Source::ChaCha(rng) => rng.next_u64(),
            Source::Silent => 0,
        }
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_word() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Circularly-symmetric complex Gaussian with unit variance
    /// (each component has variance 1/2), via Box–Muller.
    pub fn complex_gaussian(&mut self) -> Complex64 {
        if self.is_silent() {
            return Complex64::new(0.0, 0.0);
        }
        // u1 in (0, 1] keeps the logarithm finite
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        Complex64::new(radius * c, radius * s)
    }

    pub fn fill_complex_gaussian(&mut self, out: &mut [Complex64]) {
        for z in out {
            *z = self.complex_gaussian();
        }
    }
}
