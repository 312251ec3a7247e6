//! Deterministic simulator of noise-based dynamic watermarking for
//! smart-grid voltage sensing.
//!
//! The controller authenticates sensor streams by amplitude-modulating the
//! line voltage with a private band-limited Gaussian noise and checking for
//! that noise in the reported envelope. This crate reproduces the whole
//! chain (carrier synthesis, modulation, synchronous demodulation, envelope
//! extraction, cross-correlation detection) plus the splice attack that
//! recovers the combined noise from the envelope itself and replays it
//! scaled, defeating the check without knowing the private signal.
//!
//! Module map:
//! - [`signal`]: sampled series, seeded band-limited Gaussian noise, rms,
//!   correlation, boxcar averaging.
//! - [`spectrum`]: Welch PSD estimation and band power.
//! - [`grid`]: ideal and watermarked line-voltage synthesis, operational
//!   constraint checks.
//! - [`sensor`]: synchronous demodulation and envelope extraction at the
//!   report rate.
//! - [`detector`]: the controller's cross-correlation and variance tests
//!   plus classification.
//! - [`attack`]: noise extraction from the wire and fake-stream synthesis.
//! - [`config`], [`scenario`], [`montecarlo`], [`output`]: scenario
//!   configuration, end-to-end runs, seeded Monte-Carlo experiments with
//!   threshold calibration, and CSV/plot/manifest emission.
//!
//! Reproducibility: all randomness flows from 64-bit seeds through ChaCha12;
//! identical configs give bit-identical traces and summaries.

pub mod attack;
pub mod config;
pub mod csvio;
pub mod detector;
pub mod error;
pub mod grid;
pub mod montecarlo;
pub mod output;
pub mod plot;
pub mod scenario;
pub mod sensor;
pub mod signal;
pub mod spectrum;

pub use attack::{extract_noise, naive_attack, synthesize_fake, AttackMode, AttackParams};
pub use config::{AttackKind, ScenarioConfig, PRESET_NAMES};
pub use detector::{
    classify, crosscorr_detect, variance_detect, Classification, Decision, DetectorConfig,
    DetectorVerdict, Normalization,
};
pub use error::{Error, Result};
pub use grid::{
    apply_watermark_modulation, check_bandwidth_rule, check_modulation_depth, synth_line_voltage,
    GridParams,
};
pub use montecarlo::{
    calibrate_threshold, derive_seed, run_monte_carlo, ArmSpec, Calibration, ExperimentSummary,
};
pub use output::{emit_outputs, Manifest};
pub use scenario::{run_scenario, ScenarioBundle};
pub use sensor::{
    extract_envelope, sensor_report, synchronous_demodulate, to_report_grid, EnvelopeSeries,
    FilterMode, SensorConfig,
};
pub use signal::{
    gen_bandlimited_gaussian, moving_average, pearson_corr, rms, NoiseSpec, SampledSignal,
};
pub use spectrum::{band_power, psd_welch, PsdEstimate};
