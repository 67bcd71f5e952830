//! Flat Rayleigh fading channel `H = G·D^(1/2)` and the uplink model
//! `y = √ρ·H·x + n`.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::ChannelError;
use crate::matrix::ComplexMatrix;
use crate::rng::RandomStream;

/// Per-user large-scale power gains `d_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleProfile {
    gains: Vec<f64>,
}

impl LargeScaleProfile {
    pub fn new(gains: Vec<f64>) -> Result<Self, ChannelError> {
        if gains.is_empty() || gains.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(ChannelError::InvalidGain);
        }
        Ok(Self { gains })
    }

    /// Perfect power control: `d_k = 1` for every user.
    pub fn uniform(users: usize) -> Self {
        Self {
            gains: vec![1.0; users],
        }
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

/// One coherence block: small-scale factors, large-scale gains and the
/// composite channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    small_scale: ComplexMatrix,
    profile: LargeScaleProfile,
    h: ComplexMatrix,
}

impl ChannelRealization {
    pub fn small_scale(&self) -> &ComplexMatrix {
        &self.small_scale
    }

    pub fn profile(&self) -> &LargeScaleProfile {
        &self.profile
    }

    pub fn h(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn antennas(&self) -> usize {
        self.h.rows()
    }

    pub fn users(&self) -> usize {
        self.h.cols()
    }

    /// CSV dump with columns `m,k,re_g,im_g,d_k,re_h,im_h`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,k,re_g,im_g,d_k,re_h,im_h\n");
        for m in 0..self.antennas() {
            for k in 0..self.users() {
                let g = self.small_scale[(m, k)];
                let h = self.h[(m, k)];
                writeln!(
                    out,
                    "{m},{k},{:e},{:e},{:e},{:e},{:e}",
                    g.re, g.im, self.profile.gains[k], h.re, h.im
                )
                .expect("writing to a String");
            }
        }
        out
    }
}

/// `M × K` matrix of i.i.d. `CN(0, 1)` entries, drawn row by row.
pub fn generate_small_scale(
    antennas: usize,
    users: usize,
    stream: &mut RandomStream,
) -> ComplexMatrix {
    let mut g = ComplexMatrix::zeros(antennas, users);
    for m in 0..antennas {
        for k in 0..users {
            g[(m, k)] = stream.complex_gaussian();
        }
    }
    g
}

pub fn assemble_channel(
    small_scale: ComplexMatrix,
    profile: LargeScaleProfile,
) -> Result<ChannelRealization, ChannelError> {
    if small_scale.cols() != profile.len() {
        return Err(ChannelError::DimensionMismatch {
            what: "large-scale profile",
            expected: small_scale.cols(),
            found: profile.len(),
        });
    }
    let amplitude: Vec<f64> = profile.gains.iter().map(|d| d.sqrt()).collect();
    let h = ComplexMatrix::from_fn(small_scale.rows(), small_scale.cols(), |m, k| {
        small_scale[(m, k)] * amplitude[k]
    });
    Ok(ChannelRealization {
        small_scale,
        profile,
        h,
    })
}

/// Channel whose columns are exactly orthogonal with `‖h_k‖² = M·d_k`
/// (DFT columns), i.e. favorable propagation holds with equality.
pub fn orthogonal_channel(
    antennas: usize,
    profile: LargeScaleProfile,
) -> Result<ChannelRealization, ChannelError> {
    if profile.len() > antennas {
        return Err(ChannelError::DimensionMismatch {
            what: "users for orthogonal columns",
            expected: antennas,
            found: profile.len(),
        });
    }
    let g = ComplexMatrix::from_fn(antennas, profile.len(), |m, k| {
        let phase = TAU * ((m * k) % antennas) as f64 / antennas as f64;
        Complex64::from_polar(1.0, phase)
    });
    assemble_channel(g, profile)
}

/// Received vector `y = √ρ·H·x + n`, `n ~ CN(0, I)` drawn from `noise`.
pub fn apply_uplink(
    channel: &ChannelRealization,
    x: &[Complex64],
    rho: f64,
    noise: &mut RandomStream,
) -> Result<Vec<Complex64>, ChannelError> {
    let mut y = vec![Complex64::new(0.0, 0.0); channel.antennas()];
    apply_uplink_into(channel, x, rho, noise, &mut y)?;
    Ok(y)
}

pub fn apply_uplink_into(
    channel: &ChannelRealization,
    x: &[Complex64],
    rho: f64,
    noise: &mut RandomStream,
    y: &mut [Complex64],
) -> Result<(), ChannelError> {
    if x.len() != channel.users() {
        return Err(ChannelError::DimensionMismatch {
            what: "transmit vector",
            expected: channel.users(),
            found: x.len(),
        });
    }
    if y.len() != channel.antennas() {
        return Err(ChannelError::DimensionMismatch {
            what: "receive buffer",
            expected: channel.antennas(),
            found: y.len(),
        });
    }
    if !rho.is_finite() || rho < 0.0 {
        return Err(ChannelError::InvalidPower(rho));
    }
    let amp = rho.sqrt();
    let users = channel.users();
    for (ym, row) in y.iter_mut().zip(channel.h.as_slice().chunks_exact(users)) {
        let hx: Complex64 = row.iter().zip(x).map(|(h, s)| h * s).sum();
        *ym = hx * amp + noise.complex_gaussian();
    }
    Ok(())
}
