//! Link-level Monte Carlo simulator for the uplink of a massive multi-user
//! MIMO system with OFDM transmission.
//!
//! `K` single-antenna users send QPSK/OFDM symbols to an `M`-antenna base
//! station over flat Rayleigh fading. The base station knows the channel and
//! separates users with a linear detector (MRC, ZF or MMSE), or, as a
//! reference, with the single-user matched-filter bound. Bit error rates are
//! estimated by keyed, order-independent Monte Carlo trials.
//!
//! Module map:
//! - [`matrix`], [`rng`], [`stats`], [`config`]: shared types, random
//!   substreams, confidence intervals and the run configuration.
//! - [`channel`]: `H = G·D^(1/2)` and `y = √ρ·H·x + n`.
//! - [`signal`]: QPSK mapping and the OFDM modem.
//! - [`detect`]: the combining matrices and `r = Aᴴy`.
//! - [`metrics`]: sum rate, favorable propagation, the MFB receiver and
//!   closed-form BER references.
//! - [`engine`]: trials, stopping rules and sweeps.
//! - [`report`]: output tables and files.

pub mod channel;
pub mod config;
pub mod detect;
pub mod engine;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod signal;
pub mod stats;

pub use num_complex::Complex64;

pub use channel::{ChannelRealization, LargeScaleProfile};
pub use config::{validate_config, Receiver, RunConfig, StoppingRule, ValidatedConfig};
pub use detect::{DetectorKind, DetectorMatrix};
pub use engine::{BerPoint, Engine, SweepResult, TrialSpec};
pub use matrix::ComplexMatrix;
pub use signal::{OfdmParams, SymbolBlock};
