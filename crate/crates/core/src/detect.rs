//! Linear multi-user detectors: MRC, ZF and MMSE.
//!
//! Each detector is an `M × K` combining matrix `A` applied as `r = Aᴴ y`.
//! ZF and MMSE never form an explicit inverse; the regularized Gram matrix
//! is Cholesky-factored and solved against `Hᴴ`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::DetectorError;
use crate::matrix::ComplexMatrix;

/// Gram matrices with a condition estimate above this are rejected.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DetectorKind {
    #[serde(rename = "MRC")]
    Mrc,
    #[serde(rename = "ZF")]
    Zf,
    #[serde(rename = "MMSE")]
    Mmse,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 3] = [DetectorKind::Mrc, DetectorKind::Zf, DetectorKind::Mmse];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Mrc => "MRC",
            DetectorKind::Zf => "ZF",
            DetectorKind::Mmse => "MMSE",
        }
    }

    /// Whether building the detector needs `M ≥ K`.
    pub fn needs_full_rank(self) -> bool {
        !matches!(self, DetectorKind::Mrc)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorMatrix {
    kind: DetectorKind,
    combiner: ComplexMatrix,
    noise_ratio: f64,
}

impl DetectorMatrix {
    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    /// The combining matrix `A`.
    pub fn combiner(&self) -> &ComplexMatrix {
        &self.combiner
    }

    /// `σ_n²/σ_x²` used to regularize MMSE; kept for the other kinds too.
    pub fn noise_ratio(&self) -> f64 {
        self.noise_ratio
    }

    pub fn antennas(&self) -> usize {
        self.combiner.rows()
    }

    pub fn users(&self) -> usize {
        self.combiner.cols()
    }
}

/// Builds `A` for the given channel.
///
/// `noise_ratio` is `σ_n²/σ_x²`; with unit-energy symbols and unit noise
/// under `y = √ρ·H·x + n` callers should pass `1/ρ`. It is ignored by MRC
/// and ZF.
pub fn build_detector(
    kind: DetectorKind,
    h: &ComplexMatrix,
    noise_ratio: f64,
) -> Result<DetectorMatrix, DetectorError> {
    if !noise_ratio.is_finite() || noise_ratio < 0.0 {
        return Err(DetectorError::InvalidNoiseRatio(noise_ratio));
    }
    let (m, k) = (h.rows(), h.cols());
    if kind.needs_full_rank() && m < k {
        return Err(DetectorError::DimensionError(format!(
            "{kind} needs at least as many antennas as users (M={m}, K={k})"
        )));
    }
    let combiner = match kind {
        DetectorKind::Mrc => h.clone(),
        DetectorKind::Zf => regularized_combiner(h, 0.0)?,
        DetectorKind::Mmse => regularized_combiner(h, noise_ratio)?,
    };
    if kind == DetectorKind::Zf && cfg!(debug_assertions) {
        let residual = zf_residual(&combiner, h);
        let tolerance = 1e-9 * k as f64;
        if residual > tolerance {
            return Err(DetectorError::ZeroForcingResidual {
                residual,
                tolerance,
            });
        }
    }
    Ok(DetectorMatrix {
        kind,
        combiner,
        noise_ratio,
    })
}

/// `A = H (HᴴH + λI)⁻¹`, computed as `Aᴴ = (HᴴH + λI)⁻¹ Hᴴ`.
fn regularized_combiner(h: &ComplexMatrix, lambda: f64) -> Result<ComplexMatrix, DetectorError> {
    let mut w = h.gram();
    for i in 0..w.rows() {
        w[(i, i)].re += lambda;
    }
    let chol = w.cholesky().map_err(|_| DetectorError::SingularGram {
        condition: f64::INFINITY,
    })?;
    // a tiny λ leaves MMSE as ill-conditioned as ZF, so check both
    let condition = chol.condition_estimate(&w);
    if condition.is_nan() || condition > MAX_GRAM_CONDITION {
        return Err(DetectorError::SingularGram { condition });
    }
    let a_h = chol
        .solve_matrix(&h.conj_transpose())
        .map_err(|e| DetectorError::DimensionError(e.to_string()))?;
    Ok(a_h.conj_transpose())
}

/// `‖AᴴH − I‖_F`.
pub fn zf_residual(a: &ComplexMatrix, h: &ComplexMatrix) -> f64 {
    let product = a
        .conj_transpose()
        .matmul(h)
        .expect("A and H share dimensions");
    product
        .sub(&ComplexMatrix::identity(h.cols()))
        .expect("square")
        .frobenius_norm()
}

/// `r = Aᴴ y`.
pub fn detect(a: &DetectorMatrix, y: &[Complex64]) -> Result<Vec<Complex64>, DetectorError> {
    let mut r = vec![Complex64::new(0.0, 0.0); a.users()];
    detect_into(a, y, &mut r)?;
    Ok(r)
}

pub fn detect_into(
    a: &DetectorMatrix,
    y: &[Complex64],
    r: &mut [Complex64],
) -> Result<(), DetectorError> {
    a.combiner.conj_transpose_matvec_into(y, r).map_err(|_| {
        DetectorError::DimensionError(format!(
            "detector is {}x{}, got y of length {} and output of length {}",
            a.antennas(),
            a.users(),
            y.len(),
            r.len()
        ))
    })
}

/// Sample mean of `‖Aᴴy − x‖²` over `(y, x)` pairs.
pub fn empirical_mse<'a, I>(a: &DetectorMatrix, trials: I) -> Result<f64, DetectorError>
where
    I: IntoIterator<Item = (&'a [Complex64], &'a [Complex64])>,
{
    let mut r = vec![Complex64::new(0.0, 0.0); a.users()];
    let mut total = 0.0;
    let mut count = 0usize;
    for (y, x) in trials {
        if x.len() != a.users() {
            return Err(DetectorError::DimensionError(format!(
                "x has length {}, detector serves {} users",
                x.len(),
                a.users()
            )));
        }
        detect_into(a, y, &mut r)?;
        total += r
            .iter()
            .zip(x)
            .map(|(ri, xi)| (ri - xi).norm_sqr())
            .sum::<f64>();
        count += 1;
    }
    if count == 0 {
        return Err(DetectorError::EmptyCollection);
    }
    Ok(total / count as f64)
}

/// Real flops for one detector build plus one application, for reporting.
///
/// MRC costs `8·MK` (complex multiply-add per entry of `Aᴴy`). ZF and MMSE
/// add `8·MK²` for the Gram product and `(8/3)·8·K³` for the Cholesky solve.
pub fn flop_estimate(kind: DetectorKind, antennas: u64, users: u64) -> u64 {
    let mk = 8 * antennas * users;
    match kind {
        DetectorKind::Mrc => mk,
        DetectorKind::Zf | DetectorKind::Mmse => {
            mk + 8 * antennas * users * users + (64 * users * users * users) / 3
        }
    }
}
