//! Controller-side security checks: the cross-correlation watermark detector,
//! the envelope variance test, and the final classification.
//!
//! The detector correlates the received envelope fluctuation against the
//! controller's private watermark over the averaging window and normalizes by
//! the reference level times the watermark mean square, so a clean stream
//! scores near 1 and a stripped stream near 0. The raw envelope-watermark
//! average alone would converge to the watermark mean square rather than a
//! dimensionless score, hence the explicit centering and normalization.

use crate::error::{Error, Result};
use crate::sensor::EnvelopeSeries;
use crate::signal::SampledSignal;

/// How the detector forms its reference level R̂.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// R̂ is the nominal amplitude a0. Proportional fakes of factor k then
    /// score about k, which exposes the scaling sweep linearly.
    NominalA0,
    /// R̂ is the mean of the received stream over the window. Self-scaling:
    /// proportional fakes score about 1 and pass the watermark check.
    ReportedMean,
}

impl std::fmt::Display for Normalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Normalization::NominalA0 => write!(f, "nominal_a0"),
            Normalization::ReportedMean => write!(f, "reported_mean"),
        }
    }
}

/// Detector settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectorConfig {
    /// Averaging time T0, seconds. The detector uses the trailing T0 of data.
    pub t0_s: f64,
    /// Watermark-presence threshold on D_w, in (0, 1).
    pub threshold: f64,
    pub normalization: Normalization,
    /// The controller's own watermark mean square ⟨N_w²⟩ used in the
    /// normalization (the controller generated the noise, so this is ground
    /// truth, not a wire estimate).
    pub expected_nw_ms: f64,
    /// Combined watermark-plus-parasitic mean square used by the variance
    /// test.
    pub expected_total_ms: f64,
    /// Acceptable band for mean(S)/a0; outside it the level looks like an
    /// equipment fault.
    pub fault_band: (f64, f64),
    /// Acceptable band for the variance ratio; outside it the stream's
    /// fluctuation budget is inconsistent with the watermark-plus-parasitic
    /// model.
    pub variance_band: (f64, f64),
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            t0_s: 60.0,
            threshold: 0.5,
            normalization: Normalization::ReportedMean,
            expected_nw_ms: 0.09,
            expected_total_ms: 0.13,
            fault_band: (0.95, 1.05),
            variance_band: (0.5, 1.5),
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0_s > 0.0) {
            return Err(Error::parameter(format!(
                "t0_s must be > 0, got {}",
                self.t0_s
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::parameter(format!(
                "threshold must be in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.fault_band.0 >= self.fault_band.1 || self.variance_band.0 >= self.variance_band.1 {
            return Err(Error::parameter("acceptance bands must be ordered".to_string()));
        }
        Ok(())
    }
}

/// Watermark decision for one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Decision {
    WatermarkPresent,
    AttackSuspected,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Decision::WatermarkPresent => write!(f, "WATERMARK_PRESENT"),
            Decision::AttackSuspected => write!(f, "ATTACK_SUSPECTED"),
        }
    }
}

/// Overall situation classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Classification {
    NoAttack,
    Attack,
    /// The watermark is present but the level is off: the controller reads
    /// this as equipment trouble, which is exactly the cover a proportional
    /// fake provides.
    FaultSuspected,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Classification::NoAttack => write!(f, "NO_ATTACK"),
            Classification::Attack => write!(f, "ATTACK"),
            Classification::FaultSuspected => write!(f, "FAULT_SUSPECTED"),
        }
    }
}

/// Outcome of the detector on one window.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectorVerdict {
    pub d_w: f64,
    /// mean(S) / a0 over the window.
    pub reported_mean_ratio: f64,
    pub decision: Decision,
    /// Level outside the fault band. Independent of `decision`: a stealthy
    /// fake yields WatermarkPresent plus this flag.
    pub fault_flag: bool,
    /// var(S / R̂) relative to the configured fluctuation budget.
    pub variance_ratio: f64,
}

impl DetectorVerdict {
    /// Whether the variance test flags the stream as inconsistent.
    pub fn variance_flagged(&self, cfg: &DetectorConfig) -> bool {
        self.variance_ratio < cfg.variance_band.0 || self.variance_ratio > cfg.variance_band.1
    }
}

/// Trailing window of `t0_s` seconds as a sample count.
fn window_len(available: usize, rate_hz: f64, t0_s: f64) -> Result<usize> {
    let want = (t0_s * rate_hz).round() as usize;
    if want == 0 {
        return Err(Error::parameter("averaging window holds no samples".to_string()));
    }
    if want > available {
        return Err(Error::parameter(format!(
            "averaging time {t0_s} s needs {want} samples, only {available} available"
        )));
    }
    Ok(want)
}

fn reference_level(tail: &[f64], cfg: &DetectorConfig, a0: f64) -> f64 {
    match cfg.normalization {
        Normalization::NominalA0 => a0,
        Normalization::ReportedMean => tail.iter().sum::<f64>() / tail.len() as f64,
    }
}

/// Cross-correlation watermark detector.
///
/// `n_w_ref` is the controller's private watermark brought onto the envelope
/// grid (see [`crate::sensor::to_report_grid`]); time delays are taken as
/// negligible, so the reference aligns sample-for-sample with the trailing
/// window of `s`.
pub fn crosscorr_detect(
    s: &EnvelopeSeries,
    n_w_ref: &SampledSignal,
    cfg: &DetectorConfig,
    a0: f64,
) -> Result<DetectorVerdict> {
    cfg.validate()?;
    if !(a0 > 0.0) {
        return Err(Error::parameter(format!("a0 must be > 0, got {a0}")));
    }
    if (n_w_ref.sample_rate_hz - s.rate_hz).abs() > 1e-9 * s.rate_hz {
        return Err(Error::parameter(format!(
            "reference rate {} Hz does not match envelope rate {} Hz",
            n_w_ref.sample_rate_hz, s.rate_hz
        )));
    }
    let n = window_len(s.len().min(n_w_ref.len()), s.rate_hz, cfg.t0_s)?;
    let tail_s = &s.values_v[s.len() - n..];
    let tail_ref = &n_w_ref.samples[n_w_ref.len() - n..];

    let nw_ms = if cfg.expected_nw_ms > 0.0 {
        cfg.expected_nw_ms
    } else {
        tail_ref.iter().map(|v| v * v).sum::<f64>() / n as f64
    };
    if nw_ms <= 0.0 {
        return Err(Error::degenerate(
            "watermark reference has zero mean square; D_w is undefined".to_string(),
        ));
    }

    let r_hat = reference_level(tail_s, cfg, a0);
    if r_hat.abs() <= f64::EPSILON * a0 {
        return Err(Error::degenerate(
            "reference level is zero; D_w is undefined".to_string(),
        ));
    }

    let cross = tail_s
        .iter()
        .zip(tail_ref)
        .map(|(&sv, &nv)| (sv - r_hat) * nv)
        .sum::<f64>()
        / n as f64;
    let d_w = cross / (r_hat * nw_ms);

    let reported_mean_ratio = tail_s.iter().sum::<f64>() / n as f64 / a0;
    let decision = if d_w < cfg.threshold {
        Decision::AttackSuspected
    } else {
        Decision::WatermarkPresent
    };
    let fault_flag =
        reported_mean_ratio < cfg.fault_band.0 || reported_mean_ratio > cfg.fault_band.1;
    let variance_ratio = variance_detect(s, cfg, a0, cfg.expected_total_ms)?;

    Ok(DetectorVerdict {
        d_w,
        reported_mean_ratio,
        decision,
        fault_flag,
        variance_ratio,
    })
}

/// Variance test: the fluctuation power of the normalized stream relative to
/// the configured watermark-plus-parasitic budget. Near 1 means consistent;
/// near 0 means the noise has been stripped.
pub fn variance_detect(
    s: &EnvelopeSeries,
    cfg: &DetectorConfig,
    a0: f64,
    expected_total_ms: f64,
) -> Result<f64> {
    cfg.validate()?;
    if !(expected_total_ms > 0.0) {
        return Err(Error::parameter(format!(
            "expected_total_ms must be > 0, got {expected_total_ms}"
        )));
    }
    if !(a0 > 0.0) {
        return Err(Error::parameter(format!("a0 must be > 0, got {a0}")));
    }
    let n = window_len(s.len(), s.rate_hz, cfg.t0_s)?;
    let tail = &s.values_v[s.len() - n..];
    let r_hat = reference_level(tail, cfg, a0);
    if r_hat.abs() <= f64::EPSILON * a0 {
        return Err(Error::degenerate(
            "reference level is zero; variance ratio is undefined".to_string(),
        ));
    }
    let mean = tail.iter().sum::<f64>() / n as f64 / r_hat;
    let var = tail
        .iter()
        .map(|&v| {
            let x = v / r_hat - mean;
            x * x
        })
        .sum::<f64>()
        / n as f64;
    Ok(var / expected_total_ms)
}

/// Final situation call from a verdict.
pub fn classify(v: &DetectorVerdict) -> Classification {
    match (v.decision, v.fault_flag) {
        (Decision::AttackSuspected, _) => Classification::Attack,
        (Decision::WatermarkPresent, true) => Classification::FaultSuspected,
        (Decision::WatermarkPresent, false) => Classification::NoAttack,
    }
}
