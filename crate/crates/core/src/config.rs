//! Scenario configuration: one flat namespace of dotted keys covering every
//! parameter the pipeline consumes, parsed from `key = value` text files with
//! `#` comments. CLI `--set key=value` overrides reuse the same paths.

use std::path::{Path, PathBuf};

use crate::attack::{AttackMode, AttackParams};
use crate::detector::{DetectorConfig, Normalization};
use crate::error::{Error, Result};
use crate::grid::GridParams;
use crate::sensor::{FilterMode, SensorConfig};
use crate::signal::NoiseSpec;

/// Which fake the attacker substitutes for the intercepted stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    /// Flat stream at `alpha * a0`, no noise.
    Naive,
    /// Scaled replay of the extracted noise sum (`beta == gamma`).
    Proportional,
    /// Component-wise scaling; omniscient simulation device.
    SplitNoise,
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AttackKind::Naive => write!(f, "naive"),
            AttackKind::Proportional => write!(f, "proportional"),
            AttackKind::SplitNoise => write!(f, "split_noise"),
        }
    }
}

/// Attack block of the scenario config.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AttackSettings {
    pub enabled: bool,
    pub kind: AttackKind,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delay_samples: usize,
}

/// Sensor block of the scenario config.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SensorSettings {
    pub report_rate_hz: f64,
    pub filter_mode: FilterMode,
    pub phase_error_rad: f64,
}

/// Detector block of the scenario config.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectorSettings {
    pub t0_s: f64,
    pub threshold: f64,
    pub normalization: Normalization,
    pub fault_band_lo: f64,
    pub fault_band_hi: f64,
    pub variance_band_lo: f64,
    pub variance_band_hi: f64,
}

/// Complete description of one simulation run. Two runs from the same config
/// produce bit-identical numeric outputs.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScenarioConfig {
    pub a0_rms_v: f64,
    pub f_g_hz: f64,
    pub phi0_rad: f64,
    pub nw_rms: f64,
    pub nw_bandwidth_hz: f64,
    pub nw_seed: u64,
    pub np_rms: f64,
    pub np_bandwidth_hz: f64,
    pub np_seed: u64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    /// Reject out-of-band grid frequencies and promote degenerate-input
    /// warnings to errors.
    pub strict: bool,
    pub sensor: SensorSettings,
    pub detector: DetectorSettings,
    pub attack: AttackSettings,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            a0_rms_v: 100_000.0,
            f_g_hz: 60.0,
            phi0_rad: 0.0,
            nw_rms: 0.3,
            nw_bandwidth_hz: 1.0,
            nw_seed: 1,
            np_rms: 0.2,
            np_bandwidth_hz: 0.5,
            np_seed: 2,
            duration_s: 60.0,
            sample_rate_hz: 6000.0,
            master_seed: 7,
            out_dir: PathBuf::from("out"),
            strict: false,
            sensor: SensorSettings {
                report_rate_hz: 120.0,
                filter_mode: FilterMode::BoxcarAverage,
                phase_error_rad: 0.0,
            },
            detector: DetectorSettings {
                t0_s: 60.0,
                threshold: 0.5,
                normalization: Normalization::ReportedMean,
                fault_band_lo: 0.95,
                fault_band_hi: 1.05,
                variance_band_lo: 0.5,
                variance_band_hi: 1.5,
            },
            attack: AttackSettings {
                enabled: false,
                kind: AttackKind::Proportional,
                alpha: 0.5,
                beta: 0.5,
                gamma: 0.5,
                delay_samples: 0,
            },
        }
    }
}

/// Names of the shipped presets.
pub const PRESET_NAMES: &[&str] = &["figure_suite", "figure12_attack"];

impl ScenarioConfig {
    /// Built-in presets with pinned seeds. `figure_suite` regenerates the
    /// clean signal-chain traces; `figure12_attack` adds the half-scale
    /// proportional fake.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "figure_suite" => Ok(Self::default()),
            "figure12_attack" => {
                let mut cfg = Self::default();
                cfg.attack.enabled = true;
                cfg.attack.kind = AttackKind::Proportional;
                cfg.attack.alpha = 0.5;
                cfg.attack.beta = 0.5;
                cfg.attack.gamma = 0.5;
                Ok(cfg)
            }
            other => Err(Error::config(
                "preset",
                format!("unknown preset `{other}`; available: {PRESET_NAMES:?}"),
            )),
        }
    }

    /// Parse a flat config file. Unknown keys are errors so typos cannot
    /// silently fall back to defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut cfg = Self::default();
        cfg.apply_str(&text)?;
        Ok(cfg)
    }

    /// Apply `key = value` lines on top of the current values.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Set a single dotted key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn f64_of(key: &str, v: &str) -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::config(key, format!("`{v}` is not a number")))
        }
        fn u64_of(key: &str, v: &str) -> Result<u64> {
            v.parse::<u64>()
                .map_err(|_| Error::config(key, format!("`{v}` is not an unsigned integer")))
        }
        fn usize_of(key: &str, v: &str) -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| Error::config(key, format!("`{v}` is not an unsigned integer")))
        }
        fn bool_of(key: &str, v: &str) -> Result<bool> {
            match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(Error::config(key, format!("`{v}` is not a boolean"))),
            }
        }

        match key {
            "a0_rms_v" => self.a0_rms_v = f64_of(key, value)?,
            "f_g_hz" => self.f_g_hz = f64_of(key, value)?,
            "phi0_rad" => self.phi0_rad = f64_of(key, value)?,
            "nw_rms" => self.nw_rms = f64_of(key, value)?,
            "nw_bandwidth_hz" => self.nw_bandwidth_hz = f64_of(key, value)?,
            "nw_seed" => self.nw_seed = u64_of(key, value)?,
            "np_rms" => self.np_rms = f64_of(key, value)?,
            "np_bandwidth_hz" => self.np_bandwidth_hz = f64_of(key, value)?,
            "np_seed" => self.np_seed = u64_of(key, value)?,
            "duration_s" => self.duration_s = f64_of(key, value)?,
            "sample_rate_hz" => self.sample_rate_hz = f64_of(key, value)?,
            "master_seed" => self.master_seed = u64_of(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "strict" => self.strict = bool_of(key, value)?,
            "sensor.report_rate_hz" => self.sensor.report_rate_hz = f64_of(key, value)?,
            "sensor.filter_mode" => {
                self.sensor.filter_mode = match value {
                    "boxcar" | "boxcar_average" => FilterMode::BoxcarAverage,
                    "lowpass" => FilterMode::Lowpass,
                    _ => {
                        return Err(Error::config(
                            key,
                            format!("`{value}` is not one of boxcar, lowpass"),
                        ))
                    }
                }
            }
            "sensor.phase_error_rad" => self.sensor.phase_error_rad = f64_of(key, value)?,
            "detector.t0_s" => self.detector.t0_s = f64_of(key, value)?,
            "detector.threshold" => self.detector.threshold = f64_of(key, value)?,
            "detector.normalization" => {
                self.detector.normalization = match value {
                    "nominal_a0" => Normalization::NominalA0,
                    "reported_mean" => Normalization::ReportedMean,
                    _ => {
                        return Err(Error::config(
                            key,
                            format!("`{value}` is not one of nominal_a0, reported_mean"),
                        ))
                    }
                }
            }
            "detector.fault_band_lo" => self.detector.fault_band_lo = f64_of(key, value)?,
            "detector.fault_band_hi" => self.detector.fault_band_hi = f64_of(key, value)?,
            "detector.variance_band_lo" => self.detector.variance_band_lo = f64_of(key, value)?,
            "detector.variance_band_hi" => self.detector.variance_band_hi = f64_of(key, value)?,
            "attack.enabled" => self.attack.enabled = bool_of(key, value)?,
            "attack.mode" => {
                self.attack.kind = match value {
                    "naive" => AttackKind::Naive,
                    "proportional" => AttackKind::Proportional,
                    "split_noise" => AttackKind::SplitNoise,
                    _ => {
                        return Err(Error::config(
                            key,
                            format!("`{value}` is not one of naive, proportional, split_noise"),
                        ))
                    }
                }
            }
            "attack.alpha" => self.attack.alpha = f64_of(key, value)?,
            "attack.beta" => self.attack.beta = f64_of(key, value)?,
            "attack.gamma" => self.attack.gamma = f64_of(key, value)?,
            "attack.delay_samples" => self.attack.delay_samples = usize_of(key, value)?,
            _ => {
                return Err(Error::config(key, "unknown configuration key".to_string()));
            }
        }
        Ok(())
    }

    /// Render every key in a stable order; parsing this text reproduces the
    /// config exactly.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("a0_rms_v", format!("{:?}", self.a0_rms_v));
        kv("f_g_hz", format!("{:?}", self.f_g_hz));
        kv("phi0_rad", format!("{:?}", self.phi0_rad));
        kv("nw_rms", format!("{:?}", self.nw_rms));
        kv("nw_bandwidth_hz", format!("{:?}", self.nw_bandwidth_hz));
        kv("nw_seed", self.nw_seed.to_string());
        kv("np_rms", format!("{:?}", self.np_rms));
        kv("np_bandwidth_hz", format!("{:?}", self.np_bandwidth_hz));
        kv("np_seed", self.np_seed.to_string());
        kv("duration_s", format!("{:?}", self.duration_s));
        kv("sample_rate_hz", format!("{:?}", self.sample_rate_hz));
        kv("master_seed", self.master_seed.to_string());
        kv("out_dir", self.out_dir.display().to_string());
        kv("strict", self.strict.to_string());
        kv("sensor.report_rate_hz", format!("{:?}", self.sensor.report_rate_hz));
        kv("sensor.filter_mode", self.sensor.filter_mode.to_string());
        kv("sensor.phase_error_rad", format!("{:?}", self.sensor.phase_error_rad));
        kv("detector.t0_s", format!("{:?}", self.detector.t0_s));
        kv("detector.threshold", format!("{:?}", self.detector.threshold));
        kv("detector.normalization", self.detector.normalization.to_string());
        kv("detector.fault_band_lo", format!("{:?}", self.detector.fault_band_lo));
        kv("detector.fault_band_hi", format!("{:?}", self.detector.fault_band_hi));
        kv("detector.variance_band_lo", format!("{:?}", self.detector.variance_band_lo));
        kv("detector.variance_band_hi", format!("{:?}", self.detector.variance_band_hi));
        kv("attack.enabled", self.attack.enabled.to_string());
        kv("attack.mode", self.attack.kind.to_string());
        kv("attack.alpha", format!("{:?}", self.attack.alpha));
        kv("attack.beta", format!("{:?}", self.attack.beta));
        kv("attack.gamma", format!("{:?}", self.attack.gamma));
        kv("attack.delay_samples", self.attack.delay_samples.to_string());
        s
    }

    pub fn grid_params(&self) -> Result<GridParams> {
        GridParams::from_rms(self.a0_rms_v, self.f_g_hz, self.phi0_rad)
    }

    pub fn a0_peak_v(&self) -> f64 {
        self.a0_rms_v * 2.0f64.sqrt()
    }

    pub fn nw_spec(&self) -> Result<NoiseSpec> {
        NoiseSpec::new(self.nw_rms, self.nw_bandwidth_hz, self.nw_seed)
    }

    pub fn np_spec(&self) -> Result<NoiseSpec> {
        NoiseSpec::new(self.np_rms, self.np_bandwidth_hz, self.np_seed)
    }

    pub fn sensor_config(&self) -> SensorConfig {
        SensorConfig {
            carrier_freq_hz: self.f_g_hz,
            carrier_phase_rad: self.phi0_rad,
            phase_error_rad: self.sensor.phase_error_rad,
            avg_window_s: 1.0 / (2.0 * self.f_g_hz),
            report_rate_hz: self.sensor.report_rate_hz,
            filter_mode: self.sensor.filter_mode,
        }
    }

    /// Detector settings with the noise budgets derived from the controller's
    /// own noise specs: ⟨N_w²⟩ = nw_rms² and the total budget adds the
    /// parasitic term.
    pub fn detector_config(&self) -> DetectorConfig {
        DetectorConfig {
            t0_s: self.detector.t0_s,
            threshold: self.detector.threshold,
            normalization: self.detector.normalization,
            expected_nw_ms: self.nw_rms * self.nw_rms,
            expected_total_ms: self.nw_rms * self.nw_rms + self.np_rms * self.np_rms,
            fault_band: (self.detector.fault_band_lo, self.detector.fault_band_hi),
            variance_band: (self.detector.variance_band_lo, self.detector.variance_band_hi),
        }
    }

    pub fn attack_params(&self) -> AttackParams {
        AttackParams {
            alpha: self.attack.alpha,
            beta: self.attack.beta,
            gamma: self.attack.gamma,
            mode: match self.attack.kind {
                AttackKind::SplitNoise => AttackMode::SplitNoise,
                _ => AttackMode::Proportional,
            },
            delay_samples: self.attack.delay_samples,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_through_text() {
        let mut cfg = ScenarioConfig::default();
        cfg.nw_seed = 42;
        cfg.attack.enabled = true;
        cfg.attack.kind = AttackKind::SplitNoise;
        cfg.detector.normalization = Normalization::NominalA0;
        cfg.sensor.filter_mode = FilterMode::Lowpass;
        cfg.duration_s = 12.5;

        let text = cfg.to_config_string();
        let mut parsed = ScenarioConfig::default();
        parsed.apply_str(&text).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn unknown_key_is_config_error_with_path() {
        let mut cfg = ScenarioConfig::default();
        match cfg.set("detector.thresold", "0.5") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "detector.thresold"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn bad_value_is_config_error() {
        let mut cfg = ScenarioConfig::default();
        assert!(cfg.set("nw_rms", "lots").is_err());
        assert!(cfg.set("attack.enabled", "maybe").is_err());
        assert!(cfg.set("attack.mode", "sneaky").is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let mut cfg = ScenarioConfig::default();
        cfg.apply_str("# comment\n\n  nw_rms = 0.05\n").unwrap();
        assert_eq!(cfg.nw_rms, 0.05);
    }

    #[test]
    fn presets_exist_and_differ_in_attack() {
        let suite = ScenarioConfig::preset("figure_suite").unwrap();
        assert!(!suite.attack.enabled);
        let attack = ScenarioConfig::preset("figure12_attack").unwrap();
        assert!(attack.attack.enabled);
        assert_eq!(attack.attack.alpha, 0.5);
        assert!(ScenarioConfig::preset("figure99").is_err());
    }

    #[test]
    fn derived_detector_budgets() {
        let cfg = ScenarioConfig::default();
        let det = cfg.detector_config();
        assert!((det.expected_nw_ms - 0.09).abs() < 1e-12);
        assert!((det.expected_total_ms - 0.13).abs() < 1e-12);
    }

    #[test]
    fn shipped_preset_files_match_builtins() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets");
        for name in PRESET_NAMES {
            let file = dir.join(format!("{name}.conf"));
            let parsed = ScenarioConfig::from_file(&file)
                .unwrap_or_else(|e| panic!("{}: {e}", file.display()));
            assert_eq!(
                parsed,
                ScenarioConfig::preset(name).unwrap(),
                "{name}.conf has drifted from the built-in preset"
            );
        }
    }
}
