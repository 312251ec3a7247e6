//! End-to-end scenario execution: generate the noises, modulate the carrier,
//! run the sensor, optionally splice in an attack, and detect.

use crate::attack::{extract_noise, naive_attack, synthesize_fake, synthesize_fake_split};
use crate::config::{AttackKind, ScenarioConfig};
use crate::detector::{crosscorr_detect, DetectorVerdict};
use crate::error::{Error, Result};
use crate::grid::{
    apply_watermark_modulation, check_bandwidth_rule, check_modulation_depth, synth_line_voltage,
    DEFAULT_DEPTH_LIMIT,
};
use crate::sensor::{
    extract_envelope, sensor_report, synchronous_demodulate, to_report_grid, EnvelopeSeries,
};
use crate::signal::{gen_bandlimited_gaussian, SampledSignal};

/// Everything one simulated run produces. Trace fields follow the signal
/// chain in order; `wire_stream` is what the controller actually receives
/// (the fake when an attack is spliced in).
#[derive(Debug, Clone)]
pub struct ScenarioBundle {
    pub config: ScenarioConfig,
    pub line_voltage: SampledSignal,
    pub watermark_noise: SampledSignal,
    pub parasitic_noise: SampledSignal,
    pub noise_sum: SampledSignal,
    pub watermarked_voltage: SampledSignal,
    pub demodulated: SampledSignal,
    pub envelope: EnvelopeSeries,
    pub fake_envelope: Option<EnvelopeSeries>,
    pub wire_stream: EnvelopeSeries,
    /// None when detection was degenerate (e.g. no watermark configured);
    /// the accompanying warning explains why.
    pub verdict: Option<DetectorVerdict>,
    pub warnings: Vec<String>,
}

/// The sensing-side products shared by scenario runs and Monte-Carlo trials.
pub(crate) struct SensorLab {
    pub a0_peak: f64,
    pub watermark_noise: SampledSignal,
    pub parasitic_noise: SampledSignal,
    pub watermarked_voltage: SampledSignal,
    pub demodulated: SampledSignal,
    pub envelope: EnvelopeSeries,
    /// The controller's private watermark on the report grid, tail-aligned
    /// with the envelope.
    pub reference: SampledSignal,
    /// Amplitude-scaled watermark / parasitic component envelopes, present
    /// only when a split-noise fake needs them.
    pub components_v: Option<(SampledSignal, SampledSignal)>,
    pub warnings: Vec<String>,
}

/// Validate a config and attribute violations to their key paths.
pub fn validate_config(cfg: &ScenarioConfig) -> Result<Vec<String>> {
    let mut warnings = Vec::new();
    let err = |key: &str, msg: String| Err(Error::config(key, msg));

    if !(cfg.a0_rms_v > 0.0) {
        return err("a0_rms_v", format!("must be > 0, got {}", cfg.a0_rms_v));
    }
    let grid = cfg
        .grid_params()
        .map_err(|e| Error::config("f_g_hz", e.to_string()))?;
    match grid.validate_frequency(cfg.strict) {
        Ok(Some(w)) => warnings.push(w),
        Ok(None) => {}
        Err(e) => return err("f_g_hz", e.to_string()),
    }

    let nw = cfg
        .nw_spec()
        .map_err(|e| Error::config("nw_rms", e.to_string()))?;
    cfg.np_spec()
        .map_err(|e| Error::config("np_rms", e.to_string()))?;
    if cfg.nw_bandwidth_hz >= cfg.sample_rate_hz / 2.0 {
        return err(
            "nw_bandwidth_hz",
            format!("{} Hz is at or above Nyquist", cfg.nw_bandwidth_hz),
        );
    }
    if cfg.np_bandwidth_hz >= cfg.sample_rate_hz / 2.0 {
        return err(
            "np_bandwidth_hz",
            format!("{} Hz is at or above Nyquist", cfg.np_bandwidth_hz),
        );
    }
    if !check_bandwidth_rule(&nw) && cfg.nw_rms > 0.0 {
        warnings.push(format!(
            "watermark bandwidth {} Hz exceeds the advisable 0.3 Hz operational limit",
            cfg.nw_bandwidth_hz
        ));
    }

    crate::signal::sample_count(cfg.duration_s, cfg.sample_rate_hz)
        .map_err(|e| Error::config("duration_s", e.to_string()))?;
    cfg.sensor_config()
        .validate()
        .map_err(|e| Error::config("sensor.report_rate_hz", e.to_string()))?;
    let d = cfg.sample_rate_hz / cfg.sensor.report_rate_hz;
    if (d - d.round()).abs() > 1e-9 {
        return err(
            "sample_rate_hz",
            format!(
                "{} Hz is not an integer multiple of the report rate {} Hz",
                cfg.sample_rate_hz, cfg.sensor.report_rate_hz
            ),
        );
    }
    cfg.detector_config()
        .validate()
        .map_err(|e| Error::config("detector.threshold", e.to_string()))?;
    if cfg.attack.enabled {
        cfg.attack_params()
            .validate()
            .map_err(|e| Error::config("attack.beta", e.to_string()))?;
    }
    Ok(warnings)
}

/// Run the generation-to-envelope part of the pipeline.
pub(crate) fn simulate_sensor_stream(
    cfg: &ScenarioConfig,
    need_components: bool,
) -> Result<SensorLab> {
    let mut warnings = validate_config(cfg)?;
    let grid = cfg.grid_params()?;
    let sensor_cfg = cfg.sensor_config();
    let fs = cfg.sample_rate_hz;
    let duration = cfg.duration_s;

    let nw = gen_bandlimited_gaussian(&cfg.nw_spec()?, duration, fs)?;
    let np = gen_bandlimited_gaussian(&cfg.np_spec()?, duration, fs)?;
    if !check_modulation_depth(&nw, &np, DEFAULT_DEPTH_LIMIT) {
        warnings.push(format!(
            "combined modulation depth exceeds the small-modulation limit {DEFAULT_DEPTH_LIMIT} \
             (illustrative amplitudes, not operationally practical)"
        ));
    }

    let watermarked = apply_watermark_modulation(&grid, &nw, &np, duration, fs)?;
    let demod = synchronous_demodulate(&watermarked, &sensor_cfg)?;
    let envelope = extract_envelope(&demod, &sensor_cfg)?;

    // Private watermark on the report grid, trimmed so its last sample
    // coincides in time with the envelope's (the lowpass path starts later
    // and ends earlier than the boxcar grid).
    let mut reference = to_report_grid(&nw, &sensor_cfg)?;
    let env_end = envelope.time_at(envelope.len().saturating_sub(1));
    let ref_end = reference.t0_s + (reference.len() as f64 - 1.0) / reference.sample_rate_hz;
    let trim = ((ref_end - env_end) * reference.sample_rate_hz).round();
    if trim > 0.0 {
        let keep = reference.len() - trim as usize;
        reference.samples.truncate(keep);
    }

    let components_v = if need_components {
        let zero = SampledSignal::new(vec![0.0; nw.len()], fs, 0.0)?;
        let component = |noise: &SampledSignal| -> Result<SampledSignal> {
            let v = apply_watermark_modulation(&grid, noise, &zero, duration, fs)?;
            let env = extract_envelope(&synchronous_demodulate(&v, &sensor_cfg)?, &sensor_cfg)?;
            SampledSignal::new(
                env.values_v.iter().map(|&x| x - grid.a0_peak_v).collect(),
                env.rate_hz,
                env.t0_s,
            )
        };
        Some((component(&nw)?, component(&np)?))
    } else {
        None
    };

    Ok(SensorLab {
        a0_peak: grid.a0_peak_v,
        watermark_noise: nw,
        parasitic_noise: np,
        watermarked_voltage: watermarked,
        demodulated: demod,
        envelope,
        reference,
        components_v,
        warnings,
    })
}

/// Substitute the configured fake for the genuine stream.
pub(crate) fn apply_attack(
    lab: &SensorLab,
    cfg: &ScenarioConfig,
    genuine: &EnvelopeSeries,
) -> Result<EnvelopeSeries> {
    let a0 = lab.a0_peak;
    match cfg.attack.kind {
        AttackKind::Naive => {
            let rate = genuine.rate_hz;
            let mut fake =
                naive_attack(a0, cfg.attack.alpha, genuine.len() as f64 / rate, rate)?;
            fake.t0_s = genuine.t0_s;
            Ok(fake)
        }
        AttackKind::Proportional => {
            let extracted = extract_noise(genuine, a0)?;
            synthesize_fake(&extracted, &cfg.attack_params(), a0)
        }
        AttackKind::SplitNoise => {
            let (nwd, npd) = lab.components_v.as_ref().ok_or_else(|| {
                Error::parameter("split-noise attack needs component envelopes".to_string())
            })?;
            synthesize_fake_split(nwd, npd, &cfg.attack_params(), a0)
        }
    }
}

/// Execute a full scenario: generate, modulate, demodulate, extract,
/// optionally attack, detect.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioBundle> {
    let need_components = cfg.attack.enabled && cfg.attack.kind == AttackKind::SplitNoise;
    let lab = simulate_sensor_stream(cfg, need_components)?;
    let mut warnings = lab.warnings.clone();

    let grid = cfg.grid_params()?;
    let line = synth_line_voltage(&grid, cfg.duration_s, cfg.sample_rate_hz)?;
    let noise_sum = SampledSignal::new(
        lab.watermark_noise
            .samples
            .iter()
            .zip(&lab.parasitic_noise.samples)
            .map(|(&a, &b)| a + b)
            .collect(),
        cfg.sample_rate_hz,
        0.0,
    )?;

    let report = sensor_report(&lab.envelope);
    let fake = if cfg.attack.enabled {
        Some(apply_attack(&lab, cfg, &report)?)
    } else {
        None
    };
    let wire = fake.clone().unwrap_or_else(|| report.clone());

    let det_cfg = cfg.detector_config();
    let verdict = match crosscorr_detect(&wire, &lab.reference, &det_cfg, lab.a0_peak) {
        Ok(v) => Some(v),
        Err(Error::Degenerate(msg)) => {
            if cfg.strict {
                return Err(Error::Degenerate(msg));
            }
            warnings.push(format!("detector skipped: {msg}"));
            None
        }
        Err(e) => return Err(e),
    };

    Ok(ScenarioBundle {
        config: cfg.clone(),
        line_voltage: line,
        watermark_noise: lab.watermark_noise,
        parasitic_noise: lab.parasitic_noise,
        noise_sum,
        watermarked_voltage: lab.watermarked_voltage,
        demodulated: lab.demodulated,
        envelope: lab.envelope,
        fake_envelope: fake,
        wire_stream: wire,
        verdict,
        warnings,
    })
}
