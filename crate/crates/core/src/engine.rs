//! Monte Carlo BER harness.
//!
//! A trial is one coherence block: one channel draw, one OFDM symbol of
//! QPSK data per user, noise on every subcarrier, detection and error
//! counting. Trials are keyed by index, so a point's result depends only
//! on the configuration. Batches of trials run in parallel and are folded
//! back in index order, and the stopping rule is checked after every trial.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::channel::{
    apply_uplink_into, assemble_channel, generate_small_scale, ChannelRealization,
    LargeScaleProfile,
};
use crate::config::{Receiver, RunConfig, StoppingRule, ValidatedConfig};
use crate::detect::{build_detector, detect_into, DetectorKind};
use crate::error::EngineError;
use crate::metrics::{mfb_receive_into, MfbScratch};
use crate::rng::{derive_stream, Purpose, RandomStream, StreamKey};
use crate::signal::{qpsk_demap, OfdmModem, OfdmParams, SymbolBlock};
use crate::stats::{db_to_linear, linear_to_db, wilson_interval};

const FIRST_BATCH: u64 = 16;
const MAX_BATCH: u64 = 4096;

/// `ρ = Es/N0 = 2·Eb/N0` for QPSK with unit symbol energy and unit noise.
pub fn rho_from_ebno_db(ebno_db: f64) -> f64 {
    2.0 * db_to_linear(ebno_db)
}

pub fn ebno_db_from_rho(rho: f64) -> f64 {
    linear_to_db(rho / 2.0)
}

/// How the received subcarrier samples are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Chain {
    /// Per-subcarrier model `Y_n = √ρ·H·X_n + N_n`.
    #[default]
    Frequency,
    /// OFDM modulate per user, flat channel per time sample, demodulate per
    /// antenna, then frequency-domain noise from the same stream.
    TimeDomain,
}

/// Everything one trial needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub receiver: Receiver,
    pub antennas: usize,
    pub profile: LargeScaleProfile,
    pub rho: f64,
    /// MMSE regularizer; `None` means `1/ρ`.
    pub noise_ratio: Option<f64>,
    pub ofdm: OfdmParams,
    pub chain: Chain,
    /// Test hook: replace the noise stream with all zeros.
    pub noiseless: bool,
}

impl TrialSpec {
    pub fn new(
        receiver: Receiver,
        users: usize,
        antennas: usize,
        ebno_db: f64,
        ofdm: OfdmParams,
    ) -> Self {
        Self {
            receiver,
            antennas,
            profile: LargeScaleProfile::uniform(users),
            rho: rho_from_ebno_db(ebno_db),
            noise_ratio: None,
            ofdm,
            chain: Chain::Frequency,
            noiseless: false,
        }
    }

    pub fn users(&self) -> usize {
        self.profile.len()
    }

    pub fn bits_per_trial(&self) -> u64 {
        2 * self.users() as u64 * self.ofdm.num_subcarriers as u64
    }

    fn mmse_ratio(&self) -> f64 {
        self.noise_ratio.unwrap_or(1.0 / self.rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialOutcome {
    pub bits: u64,
    pub errors: u64,
}

/// Draws the channel for `trial_index`.
pub fn trial_channel(spec: &TrialSpec, trial_index: u64, master_seed: u64) -> ChannelRealization {
    let mut stream = derive_stream(StreamKey::new(master_seed, Purpose::Channel, trial_index));
    let g = generate_small_scale(spec.antennas, spec.users(), &mut stream);
    assemble_channel(g, spec.profile.clone()).expect("profile length matches user count")
}

pub fn trial_symbols(spec: &TrialSpec, trial_index: u64, master_seed: u64) -> SymbolBlock {
    let mut stream = derive_stream(StreamKey::new(master_seed, Purpose::Data, trial_index));
    SymbolBlock::random(spec.users(), spec.ofdm.num_subcarriers, &mut stream)
}

fn trial_noise(spec: &TrialSpec, trial_index: u64, master_seed: u64) -> RandomStream {
    if spec.noiseless {
        RandomStream::silent()
    } else {
        derive_stream(StreamKey::new(master_seed, Purpose::Noise, trial_index))
    }
}

/// Runs one coherence block and counts bit errors over all users and
/// subcarriers.
pub fn run_trial(
    spec: &TrialSpec,
    trial_index: u64,
    master_seed: u64,
) -> Result<TrialOutcome, EngineError> {
    let (block, decisions) = simulate_trial(spec, trial_index, master_seed)?;
    Ok(count_errors(&block, &decisions))
}

/// Soft outputs `r` for every subcarrier, `N × K` row-major.
pub fn trial_decisions(
    spec: &TrialSpec,
    trial_index: u64,
    master_seed: u64,
) -> Result<Vec<Complex64>, EngineError> {
    Ok(simulate_trial(spec, trial_index, master_seed)?.1)
}

fn simulate_trial(
    spec: &TrialSpec,
    trial_index: u64,
    master_seed: u64,
) -> Result<(SymbolBlock, Vec<Complex64>), EngineError> {
    if !spec.rho.is_finite() || spec.rho < 0.0 {
        return Err(EngineError::Config(format!(
            "invalid transmit power {}",
            spec.rho
        )));
    }
    let channel = trial_channel(spec, trial_index, master_seed);
    let block = trial_symbols(spec, trial_index, master_seed);
    let mut noise = trial_noise(spec, trial_index, master_seed);
    let decisions = match spec.chain {
        Chain::Frequency => frequency_chain(spec, &channel, &block, &mut noise),
        Chain::TimeDomain => time_domain_chain(spec, &channel, &block, &mut noise),
    }?;
    Ok((block, decisions))
}

fn frequency_chain(
    spec: &TrialSpec,
    channel: &ChannelRealization,
    block: &SymbolBlock,
    noise: &mut RandomStream,
) -> Result<Vec<Complex64>, EngineError> {
    let (m, k, n_sc) = (spec.antennas, spec.users(), spec.ofdm.num_subcarriers);
    let mut x = vec![Complex64::new(0.0, 0.0); k];
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    let mut out = vec![Complex64::new(0.0, 0.0); n_sc * k];
    match spec.receiver.linear() {
        Some(kind) => {
            let detector = build_detector(kind, channel.h(), detector_ratio(spec, kind))?;
            for (n, r) in out.chunks_exact_mut(k).enumerate() {
                block.subcarrier_vector_into(n, &mut x);
                apply_uplink_into(channel, &x, spec.rho, noise, &mut y)?;
                detect_into(&detector, &y, r)?;
            }
        }
        None => {
            let mut scratch = MfbScratch::new(m);
            for (n, r) in out.chunks_exact_mut(k).enumerate() {
                block.subcarrier_vector_into(n, &mut x);
                mfb_receive_into(channel, &x, spec.rho, noise, &mut scratch, r)?;
            }
        }
    }
    Ok(out)
}

fn detector_ratio(spec: &TrialSpec, kind: DetectorKind) -> f64 {
    match kind {
        DetectorKind::Mmse => spec.mmse_ratio(),
        DetectorKind::Mrc | DetectorKind::Zf => spec.noise_ratio.unwrap_or(0.0),
    }
}

fn time_domain_chain(
    spec: &TrialSpec,
    channel: &ChannelRealization,
    block: &SymbolBlock,
    noise: &mut RandomStream,
) -> Result<Vec<Complex64>, EngineError> {
    let kind = spec.receiver.linear().ok_or_else(|| {
        EngineError::Config("the time-domain chain supports the linear detectors only".into())
    })?;
    let (m, k, n_sc) = (spec.antennas, spec.users(), spec.ofdm.num_subcarriers);
    let modem = OfdmModem::new(spec.ofdm)?;
    let tx: Vec<Vec<Complex64>> = (0..k)
        .map(|u| modem.modulate(block.user_symbols(u)))
        .collect::<Result<_, _>>()?;
    let len = spec.ofdm.symbol_len();
    // received subcarriers before noise, per antenna
    let mut clean = Vec::with_capacity(m);
    for ant in 0..m {
        let row = channel.h().row(ant);
        let rx: Vec<Complex64> = (0..len)
            .map(|t| row.iter().zip(&tx).map(|(h, s)| h * s[t]).sum())
            .collect();
        clean.push(modem.demodulate(&rx)?);
    }
    let detector = build_detector(kind, channel.h(), detector_ratio(spec, kind))?;
    let amp = spec.rho.sqrt();
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    let mut out = vec![Complex64::new(0.0, 0.0); n_sc * k];
    for (n, r) in out.chunks_exact_mut(k).enumerate() {
        for (ym, c) in y.iter_mut().zip(&clean) {
            *ym = c[n] * amp + noise.complex_gaussian();
        }
        detect_into(&detector, &y, r)?;
    }
    Ok(out)
}

fn count_errors(block: &SymbolBlock, decisions: &[Complex64]) -> TrialOutcome {
    let k = block.users();
    let mut errors = 0u64;
    for (n, r) in decisions.chunks_exact(k).enumerate() {
        for (u, ru) in r.iter().enumerate() {
            let (b0, b1) = qpsk_demap(*ru);
            let (t0, t1) = block.bit_pair(u, n);
            errors += (b0 != t0) as u64 + (b1 != t1) as u64;
        }
    }
    TrialOutcome {
        bits: 2 * (k * block.subcarriers()) as u64,
        errors,
    }
}

/// One measured BER value.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub receiver: Receiver,
    pub users: usize,
    pub antennas: usize,
    pub ebno_db: f64,
    pub rho: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub seed: u64,
    /// False when `max_bits` was reached before `min_bit_errors`.
    pub converged: bool,
}

impl BerPoint {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub receiver: Receiver,
    pub antennas: usize,
    pub ebno_db: f64,
    pub error: EngineError,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config: RunConfig,
    pub points: Vec<BerPoint>,
    /// Wall-clock seconds per entry of `points`.
    pub wall_time_s: Vec<f64>,
    pub failures: Vec<PointFailure>,
}

impl SweepResult {
    pub fn point(&self, receiver: Receiver, antennas: usize, ebno_db: f64) -> Option<&BerPoint> {
        self.points
            .iter()
            .find(|p| p.receiver == receiver && p.antennas == antennas && p.ebno_db == ebno_db)
    }
}

/// Worker pool plus the sweep drivers.
pub struct Engine {
    pool: ThreadPool,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new(0)
    }
}

impl Engine {
    /// `workers = 0` uses all available cores.
    pub fn new(workers: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        Self { pool }
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Accumulates trials `0, 1, 2, …` until `errors ≥ min_bit_errors` or
    /// `bits ≥ max_bits`.
    pub fn run_spec(
        &self,
        spec: &TrialSpec,
        stopping: &StoppingRule,
        master_seed: u64,
    ) -> Result<BerPoint, EngineError> {
        let per_trial = spec.bits_per_trial();
        let (mut bits, mut errors, mut trials) = (0u64, 0u64, 0u64);
        let mut batch = FIRST_BATCH;
        'outer: loop {
            let remaining = stopping
                .max_bits
                .saturating_sub(bits)
                .div_ceil(per_trial)
                .max(1);
            let size = batch.min(remaining);
            let start = trials;
            let outcomes: Vec<Result<TrialOutcome, EngineError>> = self.pool.install(|| {
                (start..start + size)
                    .into_par_iter()
                    .map(|t| run_trial(spec, t, master_seed))
                    .collect()
            });
            for outcome in outcomes {
                let o = outcome?;
                bits += o.bits;
                errors += o.errors;
                trials += 1;
                if errors >= stopping.min_bit_errors || bits >= stopping.max_bits {
                    break 'outer;
                }
            }
            batch = (batch * 2).min(MAX_BATCH);
        }
        let (ci_low, ci_high) = wilson_interval(errors, bits, stopping.confidence_level);
        Ok(BerPoint {
            receiver: spec.receiver,
            users: spec.users(),
            antennas: spec.antennas,
            ebno_db: ebno_db_from_rho(spec.rho),
            rho: spec.rho,
            bits,
            errors,
            ber: errors as f64 / bits as f64,
            ci_low,
            ci_high,
            trials,
            seed: master_seed,
            converged: errors >= stopping.min_bit_errors,
        })
    }

    pub fn point_spec(
        cfg: &RunConfig,
        receiver: Receiver,
        antennas: usize,
        ebno_db: f64,
    ) -> TrialSpec {
        TrialSpec {
            receiver,
            antennas,
            profile: cfg.profile(),
            rho: rho_from_ebno_db(ebno_db),
            noise_ratio: None,
            ofdm: cfg.ofdm,
            chain: Chain::Frequency,
            noiseless: false,
        }
    }

    pub fn run_point(
        &self,
        cfg: &ValidatedConfig,
        receiver: Receiver,
        antennas: usize,
        ebno_db: f64,
    ) -> Result<BerPoint, EngineError> {
        let spec = Self::point_spec(cfg, receiver, antennas, ebno_db);
        let mut point = self.run_spec(&spec, &cfg.stopping, cfg.master_seed)?;
        // report the configured grid value, not the round trip through ρ
        point.ebno_db = ebno_db;
        Ok(point)
    }

    /// Every `(receiver, M, Eb/N0)` combination, in config order.
    pub fn run_sweep(&self, cfg: &ValidatedConfig) -> SweepResult {
        self.run_sweep_with_progress(cfg, |_| {})
    }

    pub fn run_sweep_with_progress(
        &self,
        cfg: &ValidatedConfig,
        mut progress: impl FnMut(&BerPoint),
    ) -> SweepResult {
        let mut result = SweepResult {
            config: cfg.get().clone(),
            points: Vec::new(),
            wall_time_s: Vec::new(),
            failures: Vec::new(),
        };
        for &receiver in &cfg.detectors {
            for &m in &cfg.antenna_list {
                for &ebno in &cfg.ebno_grid_db {
                    let started = Instant::now();
                    match self.run_point(cfg, receiver, m, ebno) {
                        Ok(p) => {
                            progress(&p);
                            result.points.push(p);
                            result.wall_time_s.push(started.elapsed().as_secs_f64());
                        }
                        Err(error) => result.failures.push(PointFailure {
                            receiver,
                            antennas: m,
                            ebno_db: ebno,
                            error,
                        }),
                    }
                }
            }
        }
        result
    }

    /// MRC with `ρ = E/M` for each `M`. Points carry the scaled `ρ` and the
    /// matching per-antenna Eb/N0.
    pub fn run_power_scaling(
        &self,
        cfg: &ValidatedConfig,
        reference_power: f64,
        antenna_list: &[usize],
    ) -> SweepResult {
        let mut result = SweepResult {
            config: cfg.get().clone(),
            points: Vec::new(),
            wall_time_s: Vec::new(),
            failures: Vec::new(),
        };
        for &m in antenna_list {
            let started = Instant::now();
            let spec = TrialSpec {
                rho: reference_power / m as f64,
                ..Self::point_spec(cfg, Receiver::Mrc, m, 0.0)
            };
            match self.run_spec(&spec, &cfg.stopping, cfg.master_seed) {
                Ok(p) => {
                    result.points.push(p);
                    result.wall_time_s.push(started.elapsed().as_secs_f64());
                }
                Err(error) => result.failures.push(PointFailure {
                    receiver: Receiver::Mrc,
                    antennas: m,
                    ebno_db: ebno_db_from_rho(spec.rho),
                    error,
                }),
            }
        }
        result
    }
}
