//! The sensor-line splice attack: extract the combined watermark-plus-
//! parasitic noise from the intercepted envelope stream and synthesize a
//! scaled fake that still carries the watermark.
//!
//! Every operation here consumes only what a line-tapping adversary has: the
//! wire stream, the public nominal amplitude, and chosen scaling factors.
//! There is deliberately no access path to the private watermark or to the
//! separate noise components; the one exception, split-noise synthesis, is an
//! omniscient simulation device and says so.

use crate::error::{Error, Result};
use crate::sensor::EnvelopeSeries;
use crate::signal::SampledSignal;

/// Fake-synthesis mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMode {
    /// Scale the nominal level and the extracted noise sum. The tap only
    /// yields the sum of the two noise components, so their scale factors
    /// must agree.
    Proportional,
    /// Scale the watermark and parasitic components independently. Requires
    /// oracle access to the separate components, which no line tap provides;
    /// simulation-only.
    SplitNoise,
}

impl std::fmt::Display for AttackMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AttackMode::Proportional => write!(f, "proportional"),
            AttackMode::SplitNoise => write!(f, "split_noise"),
        }
    }
}

/// Scaling triple for the synthesized stream: `alpha` scales the nominal
/// level, `beta` the watermark component, `gamma` the parasitic component.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AttackParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mode: AttackMode,
    /// Emission delay of the fake relative to the intercepted stream, in
    /// report samples. Default 0 (same-slot replacement).
    pub delay_samples: usize,
}

impl AttackParams {
    pub fn proportional(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma: beta,
            mode: AttackMode::Proportional,
            delay_samples: 0,
        }
    }

    pub fn split(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            mode: AttackMode::SplitNoise,
            delay_samples: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)]
        {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::parameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.mode == AttackMode::Proportional && self.beta != self.gamma {
            return Err(Error::parameter(format!(
                "proportional mode requires beta == gamma (the tap observes only the noise sum); \
                 got beta = {}, gamma = {}",
                self.beta, self.gamma
            )));
        }
        Ok(())
    }
}

/// Strip the nominal level from an intercepted sensor stream, leaving the
/// amplitude-scaled noise sum. Pure arithmetic; no filtering, no secrets.
pub fn extract_noise(s: &EnvelopeSeries, a0_nominal: f64) -> Result<SampledSignal> {
    if !(a0_nominal > 0.0) || !a0_nominal.is_finite() {
        return Err(Error::parameter(format!(
            "a0_nominal must be > 0, got {a0_nominal}"
        )));
    }
    SampledSignal::new(
        s.values_v.iter().map(|&v| v - a0_nominal).collect(),
        s.rate_hz,
        s.t0_s,
    )
}

/// Synthesize the fake stream from the extracted noise sum:
/// `alpha * a0 + beta * extracted(t - delay)`.
///
/// Until the delayed noise becomes available the fake holds the scaled
/// nominal level alone. The output is a well-formed envelope series on the
/// same grid as the intercepted stream.
pub fn synthesize_fake(
    extracted: &SampledSignal,
    p: &AttackParams,
    a0_nominal: f64,
) -> Result<EnvelopeSeries> {
    p.validate()?;
    if p.mode != AttackMode::Proportional {
        return Err(Error::parameter(
            "split_noise synthesis needs the separate components; use synthesize_fake_split"
                .to_string(),
        ));
    }
    if !(a0_nominal > 0.0) {
        return Err(Error::parameter(format!(
            "a0_nominal must be > 0, got {a0_nominal}"
        )));
    }
    let base = p.alpha * a0_nominal;
    let values = (0..extracted.len())
        .map(|i| match i.checked_sub(p.delay_samples) {
            Some(j) => base + p.beta * extracted.samples[j],
            None => base,
        })
        .collect();
    EnvelopeSeries::new(values, extracted.sample_rate_hz, extracted.t0_s)
}

/// Omniscient variant: scale the watermark and parasitic components
/// independently. `nwd_v` and `npd_v` are the amplitude-scaled components as
/// they appear in the detected envelope (volts). This models scenarios such
/// as a partly-watermarked hybrid supply and exists only because the
/// simulator can see both components; a real tap cannot.
pub fn synthesize_fake_split(
    nwd_v: &SampledSignal,
    npd_v: &SampledSignal,
    p: &AttackParams,
    a0_nominal: f64,
) -> Result<EnvelopeSeries> {
    p.validate()?;
    if p.mode != AttackMode::SplitNoise {
        return Err(Error::parameter(
            "synthesize_fake_split requires split_noise mode".to_string(),
        ));
    }
    if nwd_v.len() != npd_v.len() {
        return Err(Error::parameter(format!(
            "component length mismatch: {} vs {}",
            nwd_v.len(),
            npd_v.len()
        )));
    }
    if !(a0_nominal > 0.0) {
        return Err(Error::parameter(format!(
            "a0_nominal must be > 0, got {a0_nominal}"
        )));
    }
    let base = p.alpha * a0_nominal;
    let values = (0..nwd_v.len())
        .map(|i| match i.checked_sub(p.delay_samples) {
            Some(j) => base + p.beta * nwd_v.samples[j] + p.gamma * npd_v.samples[j],
            None => base,
        })
        .collect();
    EnvelopeSeries::new(values, nwd_v.sample_rate_hz, nwd_v.t0_s)
}

/// Watermark-free baseline fake: a flat stream at `alpha * a0`. The detector
/// catches this one, which is what motivates extracting the real noise.
pub fn naive_attack(
    a0_nominal: f64,
    alpha: f64,
    duration_s: f64,
    rate_hz: f64,
) -> Result<EnvelopeSeries> {
    if !(a0_nominal > 0.0) || !(alpha >= 0.0) {
        return Err(Error::parameter(format!(
            "need a0 > 0 and alpha >= 0, got a0 = {a0_nominal}, alpha = {alpha}"
        )));
    }
    if !(rate_hz > 0.0) || !(duration_s > 0.0) {
        return Err(Error::parameter(format!(
            "need duration > 0 and rate > 0, got {duration_s} s at {rate_hz} Hz"
        )));
    }
    let n = (duration_s * rate_hz).round() as usize;
    EnvelopeSeries::new(vec![alpha * a0_nominal; n], rate_hz, 1.0 / rate_hz)
}
