//! Run configuration, its strict JSON form, and validation.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::channel::LargeScaleProfile;
use crate::detect::DetectorKind;
use crate::signal::OfdmParams;

/// A receiver evaluated by the sweep: one of the linear detectors, or the
/// single-user matched-filter bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Receiver {
    #[serde(rename = "MRC")]
    Mrc,
    #[serde(rename = "ZF")]
    Zf,
    #[serde(rename = "MMSE")]
    Mmse,
    #[serde(rename = "MFB")]
    Mfb,
}

impl Receiver {
    pub fn linear(self) -> Option<DetectorKind> {
        match self {
            Receiver::Mrc => Some(DetectorKind::Mrc),
            Receiver::Zf => Some(DetectorKind::Zf),
            Receiver::Mmse => Some(DetectorKind::Mmse),
            Receiver::Mfb => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Receiver::Mrc => "MRC",
            Receiver::Zf => "ZF",
            Receiver::Mmse => "MMSE",
            Receiver::Mfb => "MFB",
        }
    }
}

impl From<DetectorKind> for Receiver {
    fn from(kind: DetectorKind) -> Self {
        match kind {
            DetectorKind::Mrc => Receiver::Mrc,
            DetectorKind::Zf => Receiver::Zf,
            DetectorKind::Mmse => Receiver::Mmse,
        }
    }
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub enum LargeScaleMode {
    /// `D = I`.
    #[default]
    #[serde(rename = "perfect-power-control")]
    PerfectPowerControl,
    /// Explicit `d_k` per user.
    #[serde(rename = "explicit")]
    Explicit(Vec<f64>),
}

impl LargeScaleMode {
    pub fn profile(&self, users: usize) -> LargeScaleProfile {
        match self {
            LargeScaleMode::PerfectPowerControl => LargeScaleProfile::uniform(users),
            LargeScaleMode::Explicit(d) => {
                LargeScaleProfile::new(d.clone()).expect("validated large-scale gains")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingRule {
    pub min_bit_errors: u64,
    pub max_bits: u64,
    pub confidence_level: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            min_bit_errors: 200,
            max_bits: 20_000_000,
            confidence_level: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerScaling {
    /// `E` in `ρ = E/M`.
    pub reference_power: f64,
    pub enabled: bool,
}

/// Settings for the sum-rate report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySettings {
    pub rho_list: Vec<f64>,
    pub realizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub num_users: usize,
    pub antenna_list: Vec<usize>,
    pub ebno_grid_db: Vec<f64>,
    pub detectors: Vec<Receiver>,
    #[serde(default)]
    pub large_scale_mode: LargeScaleMode,
    #[serde(default)]
    pub ofdm: OfdmParams,
    #[serde(default)]
    pub stopping: StoppingRule,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_scaling: Option<PowerScaling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<CapacitySettings>,
}

#[derive(Debug, Error)]
pub enum ConfigParseError {
    #[error("config is not valid JSON for a run configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad override `{0}`: expected key=value")]
    MalformedOverride(String),
    #[error("override key `{0}` does not name a configuration field")]
    UnknownOverrideKey(String),
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigParseError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies a `key=value` override. Dotted keys reach into nested
    /// objects (`stopping.max_bits=1000`). The value is parsed as JSON when
    /// possible and as a string otherwise; the result is re-parsed strictly.
    pub fn with_override(&self, assignment: &str) -> Result<Self, ConfigParseError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigParseError::MalformedOverride(assignment.to_string()))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigParseError::MalformedOverride(assignment.to_string()));
        }
        let value: Value = serde_json::from_str(raw.trim())
            .unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        let mut doc = serde_json::to_value(self)?;
        let mut cursor = &mut doc;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let obj = cursor
                .as_object_mut()
                .ok_or_else(|| ConfigParseError::UnknownOverrideKey(key.to_string()))?;
            if i + 1 == parts.len() {
                obj.insert((*part).to_string(), value.clone());
                break;
            }
            cursor = obj
                .get_mut(*part)
                .ok_or_else(|| ConfigParseError::UnknownOverrideKey(key.to_string()))?;
        }
        serde_json::from_value(doc).map_err(|e| {
            if e.to_string().contains("unknown field") {
                ConfigParseError::UnknownOverrideKey(key.to_string())
            } else {
                ConfigParseError::Json(e)
            }
        })
    }

    pub fn profile(&self) -> LargeScaleProfile {
        self.large_scale_mode.profile(self.num_users)
    }
}

/// A single invariant violation, naming the offending field.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigViolation {
    #[error("num_users: must be at least 1")]
    NoUsers,
    #[error("antenna_list: must not be empty")]
    EmptyAntennaList,
    #[error("antenna_list: antenna counts must be at least 1")]
    ZeroAntennas,
    #[error("ebno_grid_db: must not be empty")]
    EmptyGrid,
    #[error("ebno_grid_db: values must be finite")]
    NonFiniteGrid,
    #[error("ebno_grid_db: must be strictly increasing")]
    NonMonotoneGrid,
    #[error("detectors: must not be empty")]
    NoDetectors,
    #[error("detectors: {0} listed more than once")]
    DuplicateDetector(Receiver),
    #[error("antenna_list: M={m} is below K={k}, which ZF and MMSE cannot separate")]
    ZfRequiresMGeqK { m: usize, k: usize },
    #[error("stopping.confidence_level: {0} is not in (0, 1)")]
    BadConfidenceLevel(f64),
    #[error("stopping: min_bit_errors must be ≥ 1 and max_bits ≥ min_bit_errors")]
    BadStoppingRule,
    #[error("ofdm: {0}")]
    BadOfdm(String),
    #[error("large_scale_mode: {0}")]
    BadLargeScale(String),
    #[error("power_scaling.reference_power: must be positive and finite")]
    BadReferencePower,
    #[error("capacity: {0}")]
    BadCapacity(String),
}

impl ConfigViolation {
    /// The offending field, as it appears in the JSON document.
    pub fn field(&self) -> &'static str {
        use ConfigViolation::*;
        match self {
            NoUsers => "num_users",
            EmptyAntennaList | ZeroAntennas | ZfRequiresMGeqK { .. } => "antenna_list",
            EmptyGrid | NonFiniteGrid | NonMonotoneGrid => "ebno_grid_db",
            NoDetectors | DuplicateDetector(_) => "detectors",
            BadConfidenceLevel(_) => "stopping.confidence_level",
            BadStoppingRule => "stopping",
            BadOfdm(_) => "ofdm",
            BadLargeScale(_) => "large_scale_mode",
            BadReferencePower => "power_scaling.reference_power",
            BadCapacity(_) => "capacity",
        }
    }
}

/// All violations found in one config.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid configuration: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ConfigReport(pub Vec<ConfigViolation>);

impl ConfigReport {
    pub fn contains(&self, v: &ConfigViolation) -> bool {
        self.0.contains(v)
    }
}

/// A config that has passed [`validate_config`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig(RunConfig);

impl ValidatedConfig {
    pub fn get(&self) -> &RunConfig {
        &self.0
    }

    pub fn into_inner(self) -> RunConfig {
        self.0
    }
}

impl std::ops::Deref for ValidatedConfig {
    type Target = RunConfig;

    fn deref(&self) -> &RunConfig {
        &self.0
    }
}

pub fn validate_config(cfg: RunConfig) -> Result<ValidatedConfig, ConfigReport> {
    use ConfigViolation::*;
    let mut v = Vec::new();
    let k = cfg.num_users;
    if k == 0 {
        v.push(NoUsers);
    }
    if cfg.antenna_list.is_empty() {
        v.push(EmptyAntennaList);
    }
    if cfg.antenna_list.contains(&0) {
        v.push(ZeroAntennas);
    }
    if cfg.ebno_grid_db.is_empty() {
        v.push(EmptyGrid);
    }
    if cfg.ebno_grid_db.iter().any(|x| !x.is_finite()) {
        v.push(NonFiniteGrid);
    } else if cfg.ebno_grid_db.windows(2).any(|w| w[1] <= w[0]) {
        v.push(NonMonotoneGrid);
    }
    if cfg.detectors.is_empty() {
        v.push(NoDetectors);
    }
    for (i, d) in cfg.detectors.iter().enumerate() {
        if cfg.detectors[..i].contains(d) && !v.contains(&DuplicateDetector(*d)) {
            v.push(DuplicateDetector(*d));
        }
    }
    let needs_rank = cfg
        .detectors
        .iter()
        .any(|d| d.linear().is_some_and(DetectorKind::needs_full_rank));
    if needs_rank && k > 0 {
        for &m in &cfg.antenna_list {
            if m > 0 && m < k {
                v.push(ZfRequiresMGeqK { m, k });
            }
        }
    }
    let s = cfg.stopping;
    if !(s.confidence_level > 0.0 && s.confidence_level < 1.0) {
        v.push(BadConfidenceLevel(s.confidence_level));
    }
    if s.min_bit_errors < 1 || s.max_bits < s.min_bit_errors {
        v.push(BadStoppingRule);
    }
    if let Err(e) = cfg.ofdm.validate() {
        v.push(BadOfdm(e.to_string()));
    }
    if let LargeScaleMode::Explicit(d) = &cfg.large_scale_mode {
        if d.len() != k {
            v.push(BadLargeScale(format!(
                "{} gains given for {} users",
                d.len(),
                k
            )));
        }
        if d.iter().any(|x| !x.is_finite() || *x < 0.0) {
            v.push(BadLargeScale("gains must be finite and nonnegative".into()));
        }
    }
    if let Some(p) = cfg.power_scaling {
        if !(p.reference_power > 0.0 && p.reference_power.is_finite()) {
            v.push(BadReferencePower);
        }
    }
    if let Some(c) = &cfg.capacity {
        if c.realizations == 0 {
            v.push(BadCapacity("realizations must be at least 1".into()));
        }
        if c.rho_list.is_empty() || c.rho_list.iter().any(|r| !r.is_finite() || *r < 0.0) {
            v.push(BadCapacity(
                "rho_list must be non-empty, finite and nonnegative".into(),
            ));
        }
    }
    if v.is_empty() {
        Ok(ValidatedConfig(cfg))
    } else {
        Err(ConfigReport(v))
    }
}
