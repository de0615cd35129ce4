//! JSON experiment configuration: the file format behind the CLI, with
//! defaults mirroring the reference experiments (unit segment, original
//! signal `sin(10 pi t)`, the standard noise mixtures).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectralError};
use crate::filters::{FilterDesign, FilterFamily, PassKind};
use crate::modeling::{NoiseSpec, RunConfig, ShiftMode, Tone, Wave};

fn invalid(field: &str, why: &str) -> SpectralError {
    SpectralError::InvalidParameter(format!("config field `{field}`: {why}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    Butterworth,
    LinkwitzRiley,
    #[serde(rename = "chebyshev-1")]
    Chebyshev1,
    #[serde(rename = "chebyshev-2")]
    Chebyshev2,
}

impl From<FamilyName> for FilterFamily {
    fn from(f: FamilyName) -> Self {
        match f {
            FamilyName::Butterworth => FilterFamily::Butterworth,
            FamilyName::LinkwitzRiley => FilterFamily::LinkwitzRiley,
            FamilyName::Chebyshev1 => FilterFamily::ChebyshevI,
            FamilyName::Chebyshev2 => FilterFamily::ChebyshevII,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveName {
    Sin,
    Cos,
}

/// A pure tone with its frequency stored as a multiple of pi, which keeps
/// resonant frequencies exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToneConfig {
    pub wave: WaveName,
    pub omega_over_pi: f64,
}

impl ToneConfig {
    pub fn tone(&self) -> Tone {
        Tone {
            wave: match self.wave {
                WaveName::Sin => Wave::Sin,
                WaveName::Cos => Wave::Cos,
            },
            omega: self.omega_over_pi * std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NoiseConfig {
    Deterministic { sigma: f64, tones: Vec<ToneConfig> },
    Random { sigma: f64, realizations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ShiftModeName {
    #[default]
    Natural,
    Zero,
}

impl From<ShiftModeName> for ShiftMode {
    fn from(m: ShiftModeName) -> Self {
        match m {
            ShiftModeName::Natural => ShiftMode::Natural,
            ShiftModeName::Zero => ShiftMode::ZeroExt,
        }
    }
}

fn default_horizon() -> f64 {
    1.0
}

fn default_signal() -> ToneConfig {
    ToneConfig { wave: WaveName::Sin, omega_over_pi: 10.0 }
}

fn default_seed() -> u64 {
    1
}

fn default_realizations() -> usize {
    10_000
}

/// One experiment file: a family swept over orders and truncation
/// orders, under one signal/noise setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilyName,
    pub orders: Vec<usize>,
    pub truncations: Vec<usize>,
    /// Cutoff frequency in rad/s.
    pub cutoff: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ripple: Option<f64>,
    #[serde(default = "default_signal")]
    pub signal: ToneConfig,
    pub noise: NoiseConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub shift_mode: ShiftModeName,
}

impl ExperimentConfig {
    /// The standard deterministic noise mixture.
    pub fn standard_deterministic_noise() -> NoiseConfig {
        NoiseConfig::Deterministic {
            sigma: 0.2,
            tones: vec![
                ToneConfig { wave: WaveName::Sin, omega_over_pi: 78.0 },
                ToneConfig { wave: WaveName::Cos, omega_over_pi: 95.0 },
                ToneConfig { wave: WaveName::Sin, omega_over_pi: 112.0 },
            ],
        }
    }

    /// The standard random noise setting.
    pub fn standard_random_noise() -> NoiseConfig {
        NoiseConfig::Random { sigma: 0.01, realizations: default_realizations() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| SpectralError::InvalidParameter(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn validate(&self) -> Result<()> {
        if self.orders.is_empty() {
            return Err(invalid("orders", "must list at least one filter order"));
        }
        for &n in &self.orders {
            if n == 0 {
                return Err(invalid("orders", "filter orders must be positive"));
            }
            if self.family == FamilyName::LinkwitzRiley && n % 2 != 0 {
                return Err(invalid("orders", "Linkwitz-Riley orders must be even"));
            }
        }
        if self.truncations.is_empty() {
            return Err(invalid("truncations", "must list at least one truncation order"));
        }
        if self.truncations.iter().any(|&l| l < 2) {
            return Err(invalid("truncations", "truncation orders must be at least 2"));
        }
        if !(self.cutoff > 0.0) {
            return Err(invalid("cutoff", "must be a positive frequency in rad/s"));
        }
        if !(self.horizon > 0.0) {
            return Err(invalid("horizon", "must be a positive time span"));
        }
        match (self.family, self.ripple) {
            (FamilyName::Chebyshev1 | FamilyName::Chebyshev2, None) => {
                return Err(invalid("ripple", "required for Chebyshev families"));
            }
            (FamilyName::Chebyshev1 | FamilyName::Chebyshev2, Some(r)) if !(r > 0.0) => {
                return Err(invalid("ripple", "must be positive"));
            }
            _ => {}
        }
        if !(self.signal.omega_over_pi > 0.0) {
            return Err(invalid("signal.omega_over_pi", "must be positive"));
        }
        match &self.noise {
            NoiseConfig::Deterministic { sigma, .. } => {
                if !(*sigma >= 0.0) {
                    return Err(invalid("noise.sigma", "must be non-negative"));
                }
            }
            NoiseConfig::Random { sigma, realizations } => {
                if !(*sigma >= 0.0) {
                    return Err(invalid("noise.sigma", "must be non-negative"));
                }
                if *realizations == 0 {
                    return Err(invalid("noise.realizations", "must be at least 1"));
                }
            }
        }
        Ok(())
    }

    pub fn design(&self, order: usize) -> Result<FilterDesign> {
        FilterDesign::new(self.family.into(), order, self.ripple, self.cutoff, PassKind::LowPass)
    }

    /// The modeling-layer configuration for one `(order, truncation)` cell.
    pub fn run_config(&self, order: usize, len: usize) -> Result<RunConfig> {
        let noise = match &self.noise {
            NoiseConfig::Deterministic { sigma, tones } => NoiseSpec::Deterministic {
                sigma: *sigma,
                tones: tones.iter().map(ToneConfig::tone).collect(),
            },
            NoiseConfig::Random { sigma, realizations } => {
                NoiseSpec::Random { sigma: *sigma, realizations: *realizations }
            }
        };
        Ok(RunConfig {
            design: self.design(order)?,
            horizon: self.horizon,
            len,
            signal: self.signal.tone(),
            noise,
            seed: self.seed,
            shift_mode: self.shift_mode.into(),
        })
    }

    pub fn is_random(&self) -> bool {
        matches!(self.noise, NoiseConfig::Random { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        ExperimentConfig {
            family: FamilyName::Butterworth,
            orders: vec![2, 3, 4, 5, 6],
            truncations: vec![128, 256, 512, 1024],
            cutoff: 40.0 * std::f64::consts::PI,
            horizon: 1.0,
            ripple: None,
            signal: default_signal(),
            noise: ExperimentConfig::standard_deterministic_noise(),
            seed: 1,
            shift_mode: ShiftModeName::Natural,
        }
    }

    #[test]
    fn round_trip_is_idempotent() {
        let cfg = sample();
        let once = cfg.to_json();
        let reparsed = ExperimentConfig::from_json(&once).unwrap();
        assert_eq!(cfg, reparsed);
        assert_eq!(once, reparsed.to_json());
    }

    #[test]
    fn defaults_fill_in_missing_fields() {
        let text = r#"{
            "family": "butterworth",
            "orders": [3],
            "truncations": [128],
            "cutoff": 125.0,
            "noise": {"kind": "random", "sigma": 0.01, "realizations": 100}
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.horizon, 1.0);
        assert_eq!(cfg.signal, default_signal());
        assert_eq!(cfg.shift_mode, ShiftModeName::Natural);
        assert_eq!(cfg.seed, 1);
    }

    #[test]
    fn validation_names_the_offending_field() {
        let mut cfg = sample();
        cfg.cutoff = -1.0;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("cutoff"), "{msg}");

        let mut cfg = sample();
        cfg.family = FamilyName::Chebyshev1;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("ripple"), "{msg}");

        let mut cfg = sample();
        cfg.family = FamilyName::LinkwitzRiley;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("orders"), "{msg}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
            "family": "butterworth",
            "orders": [3],
            "truncations": [128],
            "cutoff": 125.0,
            "noise": {"kind": "random", "sigma": 0.01, "realizations": 100},
            "surprise": true
        }"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn run_config_carries_the_cell_through() {
        let cfg = sample();
        let run = cfg.run_config(3, 256).unwrap();
        assert_eq!(run.len, 256);
        assert_eq!(run.design.order, 3);
        assert_eq!(run.signal.omega, 10.0 * std::f64::consts::PI);
    }
}
