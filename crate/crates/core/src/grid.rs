//! Line-voltage synthesis: the ideal sinusoidal grid and its amplitude
//! modulation by the watermark and parasitic noises.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::{sample_count, SampledSignal};

/// US grid operating-frequency band, Hz.
pub const GRID_FREQ_BAND_HZ: (f64, f64) = (59.7, 60.3);

/// Watermark-noise bandwidth limit imposed by generator control dynamics, Hz.
pub const BANDWIDTH_LIMIT_HZ: f64 = 0.3;

/// Default mean-square modulation-depth limit (10% rms keeps the envelope
/// inside typical over/under-voltage protection bands).
pub const DEFAULT_DEPTH_LIMIT: f64 = 0.01;

/// Nominal grid parameters. Amplitude is stored as peak volts; conversion
/// from the rms values quoted in configuration happens in exactly one place,
/// [`GridParams::from_rms`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridParams {
    /// Nominal peak voltage, volts.
    pub a0_peak_v: f64,
    /// Grid frequency, Hz.
    pub f_g_hz: f64,
    /// Carrier phase, radians.
    pub phi0_rad: f64,
}

impl GridParams {
    pub fn new(a0_peak_v: f64, f_g_hz: f64, phi0_rad: f64) -> Result<Self> {
        if !(a0_peak_v > 0.0) || !a0_peak_v.is_finite() {
            return Err(Error::parameter(format!(
                "a0_peak_v must be > 0, got {a0_peak_v}"
            )));
        }
        if !f_g_hz.is_finite() || f_g_hz <= 0.0 {
            return Err(Error::parameter(format!(
                "f_g_hz must be > 0, got {f_g_hz}"
            )));
        }
        Ok(Self {
            a0_peak_v,
            f_g_hz,
            phi0_rad,
        })
    }

    /// Build from an rms amplitude (the quoted "100 kV rms" style value).
    pub fn from_rms(a0_rms_v: f64, f_g_hz: f64, phi0_rad: f64) -> Result<Self> {
        Self::new(a0_rms_v * 2.0f64.sqrt(), f_g_hz, phi0_rad)
    }

    pub fn a0_rms_v(&self) -> f64 {
        self.a0_peak_v / 2.0f64.sqrt()
    }

    /// Whether the configured frequency sits inside the allowable grid band.
    pub fn frequency_in_band(&self) -> bool {
        self.f_g_hz >= GRID_FREQ_BAND_HZ.0 && self.f_g_hz <= GRID_FREQ_BAND_HZ.1
    }

    /// Enforce the operating band: an error in strict mode, a warning string
    /// otherwise.
    pub fn validate_frequency(&self, strict: bool) -> Result<Option<String>> {
        if self.frequency_in_band() {
            return Ok(None);
        }
        let msg = format!(
            "grid frequency {} Hz outside the allowable band [{}, {}] Hz",
            self.f_g_hz, GRID_FREQ_BAND_HZ.0, GRID_FREQ_BAND_HZ.1
        );
        if strict {
            Err(Error::parameter(msg))
        } else {
            Ok(Some(msg))
        }
    }
}

/// Ideal (unwatermarked) line voltage: a pure sinusoid at the grid frequency.
pub fn synth_line_voltage(g: &GridParams, duration_s: f64, fs: f64) -> Result<SampledSignal> {
    let n = sample_count(duration_s, fs)?;
    if fs <= 2.0 * g.f_g_hz {
        return Err(Error::parameter(format!(
            "sample rate {fs} Hz below Nyquist for a {} Hz carrier",
            g.f_g_hz
        )));
    }
    let w = 2.0 * PI * g.f_g_hz / fs;
    let samples = (0..n)
        .map(|i| g.a0_peak_v * (w * i as f64 + g.phi0_rad).sin())
        .collect();
    SampledSignal::new(samples, fs, 0.0)
}

/// Watermarked line voltage: the carrier amplitude-modulated sample-wise by
/// `1 + n_w(t) + n_p(t)`. Either noise may be all-zero.
pub fn apply_watermark_modulation(
    g: &GridParams,
    n_w: &SampledSignal,
    n_p: &SampledSignal,
    duration_s: f64,
    fs: f64,
) -> Result<SampledSignal> {
    let n = sample_count(duration_s, fs)?;
    for (name, noise) in [("n_w", n_w), ("n_p", n_p)] {
        if noise.len() != n {
            return Err(Error::parameter(format!(
                "{name} has {} samples, expected {n}",
                noise.len()
            )));
        }
        if (noise.sample_rate_hz - fs).abs() > 1e-9 * fs {
            return Err(Error::parameter(format!(
                "{name} sampled at {} Hz, carrier at {fs} Hz",
                noise.sample_rate_hz
            )));
        }
    }
    if fs <= 2.0 * g.f_g_hz {
        return Err(Error::parameter(format!(
            "sample rate {fs} Hz below Nyquist for a {} Hz carrier",
            g.f_g_hz
        )));
    }
    let w = 2.0 * PI * g.f_g_hz / fs;
    let samples = (0..n)
        .map(|i| {
            let envelope = g.a0_peak_v * (1.0 + n_w.samples[i] + n_p.samples[i]);
            envelope * (w * i as f64 + g.phi0_rad).sin()
        })
        .collect();
    SampledSignal::new(samples, fs, 0.0)
}

/// Small-modulation condition: true iff the combined mean-square modulation
/// depth stays at or below `limit`.
pub fn check_modulation_depth(n_w: &SampledSignal, n_p: &SampledSignal, limit: f64) -> bool {
    if n_w.is_empty() && n_p.is_empty() {
        return true;
    }
    let n = n_w.len().max(n_p.len());
    let at = |s: &SampledSignal, i: usize| s.samples.get(i).copied().unwrap_or(0.0);
    let ms = (0..n)
        .map(|i| {
            let v = at(n_w, i) + at(n_p, i);
            v * v
        })
        .sum::<f64>()
        / n as f64;
    ms <= limit
}

/// Bandwidth rule: the watermark band must stay within what generator control
/// dynamics tolerate.
pub fn check_bandwidth_rule(spec: &crate::signal::NoiseSpec) -> bool {
    spec.bandwidth_hz <= BANDWIDTH_LIMIT_HZ
}
