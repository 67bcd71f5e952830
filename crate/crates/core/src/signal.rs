//! QPSK mapping and the OFDM modulator/demodulator pair.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::SignalError;
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfdmParams {
    pub num_subcarriers: usize,
    pub cyclic_prefix: usize,
}

impl OfdmParams {
    pub fn new(num_subcarriers: usize, cyclic_prefix: usize) -> Result<Self, SignalError> {
        let p = Self {
            num_subcarriers,
            cyclic_prefix,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        if !self.num_subcarriers.is_power_of_two() {
            return Err(SignalError::InvalidParams(format!(
                "num_subcarriers {} is not a power of two",
                self.num_subcarriers
            )));
        }
        if self.cyclic_prefix >= self.num_subcarriers {
            return Err(SignalError::InvalidParams(format!(
                "cyclic_prefix {} must be below num_subcarriers {}",
                self.cyclic_prefix, self.num_subcarriers
            )));
        }
        Ok(())
    }

    pub fn symbol_len(&self) -> usize {
        self.num_subcarriers + self.cyclic_prefix
    }
}

impl Default for OfdmParams {
    fn default() -> Self {
        Self {
            num_subcarriers: 2048,
            cyclic_prefix: 128,
        }
    }
}

/// Gray-mapped QPSK: first bit selects the sign of the real part, second
/// bit the sign of the imaginary part, `0 → +`.
pub fn qpsk_map(b0: bool, b1: bool) -> Complex64 {
    let re = if b0 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
    let im = if b1 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
    Complex64::new(re, im)
}

/// Hard-decision slicer. Zero decodes as bit 0.
pub fn qpsk_demap(r: Complex64) -> (bool, bool) {
    (r.re < 0.0, r.im < 0.0)
}

/// Frequency-domain QPSK symbols for all users of one OFDM symbol, with
/// their source bits.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    users: usize,
    subcarriers: usize,
    /// `users × 2·subcarriers`, row-major, bit pair `(2n, 2n+1)` is subcarrier `n`.
    bits: Vec<bool>,
    /// `users × subcarriers`, row-major.
    symbols: Vec<Complex64>,
}

impl SymbolBlock {
    /// Draws i.i.d. equiprobable bits for every user and subcarrier.
    pub fn random(users: usize, subcarriers: usize, stream: &mut RandomStream) -> Self {
        let total = users * subcarriers * 2;
        let mut bits = Vec::with_capacity(total);
        while bits.len() < total {
            let word = stream.next_word();
            let take = (total - bits.len()).min(64);
            bits.extend((0..take).map(|i| (word >> i) & 1 == 1));
        }
        Self::from_bits(users, subcarriers, bits).expect("length computed above")
    }

    pub fn from_bits(
        users: usize,
        subcarriers: usize,
        bits: Vec<bool>,
    ) -> Result<Self, SignalError> {
        if bits.len() != users * subcarriers * 2 {
            return Err(SignalError::LengthMismatch {
                expected: users * subcarriers * 2,
                found: bits.len(),
            });
        }
        let symbols = bits.chunks_exact(2).map(|p| qpsk_map(p[0], p[1])).collect();
        Ok(Self {
            users,
            subcarriers,
            bits,
            symbols,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit_pair(&self, user: usize, subcarrier: usize) -> (bool, bool) {
        let i = 2 * (user * self.subcarriers + subcarrier);
        (self.bits[i], self.bits[i + 1])
    }

    pub fn symbol(&self, user: usize, subcarrier: usize) -> Complex64 {
        self.symbols[user * self.subcarriers + subcarrier]
    }

    /// The `N` frequency-domain symbols of one user.
    pub fn user_symbols(&self, user: usize) -> &[Complex64] {
        &self.symbols[user * self.subcarriers..(user + 1) * self.subcarriers]
    }

    /// Writes the `K` users' symbols on subcarrier `n` into `out`.
    pub fn subcarrier_vector_into(&self, subcarrier: usize, out: &mut [Complex64]) {
        for (k, o) in out.iter_mut().enumerate().take(self.users) {
            *o = self.symbols[k * self.subcarriers + subcarrier];
        }
    }

    pub fn mean_energy(&self) -> f64 {
        self.symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.symbols.len() as f64
    }
}

/// Planned unitary OFDM transceiver for fixed parameters.
#[derive(Clone)]
pub struct OfdmModem {
    params: OfdmParams,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for OfdmModem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OfdmModem")
            .field("params", &self.params)
            .finish()
    }
}

impl OfdmModem {
    pub fn new(params: OfdmParams) -> Result<Self, SignalError> {
        params.validate()?;
        let mut planner = FftPlanner::new();
        let n = params.num_subcarriers;
        Ok(Self {
            params,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
        })
    }

    pub fn params(&self) -> OfdmParams {
        self.params
    }

    /// Unitary inverse DFT then cyclic prefix.
    pub fn modulate(&self, freq: &[Complex64]) -> Result<Vec<Complex64>, SignalError> {
        let n = self.params.num_subcarriers;
        let cp = self.params.cyclic_prefix;
        if freq.len() != n {
            return Err(SignalError::LengthMismatch {
                expected: n,
                found: freq.len(),
            });
        }
        let mut body = freq.to_vec();
        self.inverse.process(&mut body);
        body.iter_mut().for_each(|z| *z *= self.scale);
        let mut out = Vec::with_capacity(n + cp);
        out.extend_from_slice(&body[n - cp..]);
        out.extend_from_slice(&body);
        Ok(out)
    }

    /// Strips the cyclic prefix then applies the unitary DFT.
    pub fn demodulate(&self, time: &[Complex64]) -> Result<Vec<Complex64>, SignalError> {
        let n = self.params.num_subcarriers;
        let cp = self.params.cyclic_prefix;
        if time.len() != n + cp {
            return Err(SignalError::LengthMismatch {
                expected: n + cp,
                found: time.len(),
            });
        }
        let mut body = time[cp..].to_vec();
        self.forward.process(&mut body);
        body.iter_mut().for_each(|z| *z *= self.scale);
        Ok(body)
    }
}

pub fn ofdm_modulate(
    freq: &[Complex64],
    params: OfdmParams,
) -> Result<Vec<Complex64>, SignalError> {
    OfdmModem::new(params)?.modulate(freq)
}

pub fn ofdm_demodulate(
    time: &[Complex64],
    params: OfdmParams,
) -> Result<Vec<Complex64>, SignalError> {
    OfdmModem::new(params)?.demodulate(time)
}
