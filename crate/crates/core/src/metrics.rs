//! Capacity, favorable-propagation diagnostics, the matched-filter bound
//! receiver and closed-form BER references.

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{ChannelError, MetricsError};
use crate::matrix::ComplexMatrix;
use crate::rng::RandomStream;
use crate::stats::db_to_linear;

/// Relative deviation of `HᴴH/M` from `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FavorableStat {
    pub antennas: usize,
    pub users: usize,
    pub epsilon: f64,
}

/// `ε = ‖HᴴH/M − D‖_F / ‖D‖_F`.
pub fn favorable_deviation(channel: &ChannelRealization) -> Result<FavorableStat, MetricsError> {
    let d = channel.profile().gains();
    let d_norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    if d_norm == 0.0 {
        return Err(MetricsError::ZeroLargeScale);
    }
    let m = channel.antennas();
    let k = channel.users();
    let gram = channel.h().gram();
    let mut acc = 0.0;
    for i in 0..k {
        for j in 0..k {
            let mut dev = gram[(i, j)] / m as f64;
            if i == j {
                dev -= d[i];
            }
            acc += dev.norm_sqr();
        }
    }
    Ok(FavorableStat {
        antennas: m,
        users: k,
        epsilon: acc.sqrt() / d_norm,
    })
}

/// Exact mutual information and its favorable-propagation approximation,
/// both in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumRate {
    pub exact: f64,
    pub approx: f64,
}

impl SumRate {
    /// `|exact − approx| / exact`, zero when both vanish.
    pub fn relative_error(&self) -> f64 {
        if self.exact == 0.0 {
            if self.approx == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.exact - self.approx).abs() / self.exact
        }
    }
}

/// `log₂ det(I + ρ·HᴴH)` alongside `Σ_k log₂(1 + ρ·M·d_k)`.
pub fn sum_rate(channel: &ChannelRealization, rho: f64) -> Result<SumRate, MetricsError> {
    if !rho.is_finite() || rho < 0.0 {
        return Err(MetricsError::InvalidPower(rho));
    }
    let m = channel.antennas() as f64;
    let approx = channel
        .profile()
        .gains()
        .iter()
        .map(|d| (rho * m * d).ln_1p())
        .sum::<f64>()
        / std::f64::consts::LN_2;
    if rho == 0.0 {
        return Ok(SumRate { exact: 0.0, approx });
    }
    let mut w = channel.h().gram().scale(rho);
    for i in 0..w.rows() {
        w[(i, i)].re += 1.0;
    }
    let exact = w
        .cholesky()
        .expect("I + ρHᴴH is positive definite")
        .ln_det()
        / std::f64::consts::LN_2;
    Ok(SumRate { exact, approx })
}

/// Matched-filter bound receiver: user `i` sees only its own signal plus
/// the shared noise draw, `y⁽ⁱ⁾ = √ρ·h_i·x_i + n`, and is combined with
/// `h_iᴴ`.
pub fn mfb_receive(
    channel: &ChannelRealization,
    x: &[Complex64],
    rho: f64,
    noise: &mut RandomStream,
) -> Result<Vec<Complex64>, ChannelError> {
    let mut scratch = MfbScratch::new(channel.antennas());
    let mut r = vec![Complex64::new(0.0, 0.0); channel.users()];
    mfb_receive_into(channel, x, rho, noise, &mut scratch, &mut r)?;
    Ok(r)
}

/// Reusable buffers for [`mfb_receive_into`].
#[derive(Debug, Clone)]
pub struct MfbScratch {
    noise: Vec<Complex64>,
}

impl MfbScratch {
    pub fn new(antennas: usize) -> Self {
        Self {
            noise: vec![Complex64::new(0.0, 0.0); antennas],
        }
    }
}

pub fn mfb_receive_into(
    channel: &ChannelRealization,
    x: &[Complex64],
    rho: f64,
    noise: &mut RandomStream,
    scratch: &mut MfbScratch,
    r: &mut [Complex64],
) -> Result<(), ChannelError> {
    let (m, k) = (channel.antennas(), channel.users());
    if x.len() != k || r.len() != k {
        return Err(ChannelError::DimensionMismatch {
            what: "transmit vector",
            expected: k,
            found: x.len().min(r.len()),
        });
    }
    if scratch.noise.len() != m {
        scratch.noise.resize(m, Complex64::new(0.0, 0.0));
    }
    if !rho.is_finite() || rho < 0.0 {
        return Err(ChannelError::InvalidPower(rho));
    }
    noise.fill_complex_gaussian(&mut scratch.noise);
    let amp = rho.sqrt();
    r.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    let h: &ComplexMatrix = channel.h();
    for (row, n) in h.as_slice().chunks_exact(k).zip(&scratch.noise) {
        for ((ri, hi), xi) in r.iter_mut().zip(row).zip(x) {
            // same operation order as the multi-user uplink with K = 1
            let y = (hi * xi) * amp + n;
            *ri += hi.conj() * y;
        }
    }
    Ok(())
}

/// Average BER of Gray-coded QPSK with `branches`-fold MRC over i.i.d.
/// Rayleigh fading, `gamma` being the mean per-branch SNR per bit (linear).
pub fn rayleigh_mrc_ber(branches: usize, gamma: f64) -> f64 {
    assert!(branches >= 1, "need at least one branch");
    if gamma <= 0.0 {
        return 0.5;
    }
    if gamma.is_infinite() {
        return 0.0;
    }
    let mu = (gamma / (1.0 + gamma)).sqrt();
    // p = (1 - μ)/2 without cancellation
    let p = 0.5 / ((1.0 + gamma) * (1.0 + mu));
    let q = 1.0 - p;
    let l = branches as f64;
    // log-domain sum of p^L · C(L-1+k, k) · q^k
    let mut log_term = l * p.ln();
    let mut max = log_term;
    let mut logs = Vec::with_capacity(branches);
    logs.push(log_term);
    for k in 1..branches {
        log_term += ((l - 1.0 + k as f64) / k as f64).ln() + q.ln();
        max = max.max(log_term);
        logs.push(log_term);
    }
    let scaled: f64 = logs.iter().map(|t| (t - max).exp()).sum();
    (max + scaled.ln()).exp()
}

/// [`rayleigh_mrc_ber`] with Eb/N0 in dB.
pub fn rayleigh_mrc_ber_analytic(branches: usize, ebno_db: f64) -> f64 {
    rayleigh_mrc_ber(branches, db_to_linear(ebno_db))
}
