//! Voltage-sensor model: synchronous demodulation of the line voltage and
//! finite-time averaging that recovers the envelope at the report rate.
//!
//! The demodulator multiplies by a phase-locked reference (a perfect PLL is
//! granted; a static phase error is available as an experiment knob). The
//! factor 2 lives in the demodulation stage so its DC term equals the
//! envelope directly and the averaging stage needs no gain correction.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::{decimate, moving_average, SampledSignal};

/// Envelope smoothing strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Average over exactly one period of the demodulation second harmonic.
    /// This is the exact-cancellation path and the default.
    BoxcarAverage,
    /// Linear-phase FIR low-pass (Blackman-windowed sinc, unit DC gain,
    /// group delay compensated) that suppresses the second harmonic before
    /// decimation.
    Lowpass,
}

impl std::fmt::Display for FilterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FilterMode::BoxcarAverage => write!(f, "boxcar"),
            FilterMode::Lowpass => write!(f, "lowpass"),
        }
    }
}

/// Sensor-side configuration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SensorConfig {
    /// Reference frequency; must equal the grid frequency.
    pub carrier_freq_hz: f64,
    /// Reference phase (the carrier phase under a locked PLL).
    pub carrier_phase_rad: f64,
    /// Static phase-lock error added to the reference, radians. Scales the
    /// recovered envelope by `cos(error)`; defaults to 0.
    pub phase_error_rad: f64,
    /// Averaging window, seconds. In boxcar mode this must equal one period
    /// of the second harmonic, `1 / (2 * carrier_freq_hz)`.
    pub avg_window_s: f64,
    /// Envelope output rate, Hz.
    pub report_rate_hz: f64,
    pub filter_mode: FilterMode,
}

impl SensorConfig {
    /// Standard sensor for a given carrier: τ = 1/(2f), reports at 2f.
    pub fn for_carrier(carrier_freq_hz: f64, carrier_phase_rad: f64) -> Self {
        Self {
            carrier_freq_hz,
            carrier_phase_rad,
            phase_error_rad: 0.0,
            avg_window_s: 1.0 / (2.0 * carrier_freq_hz),
            report_rate_hz: 2.0 * carrier_freq_hz,
            filter_mode: FilterMode::BoxcarAverage,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_freq_hz > 0.0) {
            return Err(Error::parameter(format!(
                "carrier frequency must be > 0, got {}",
                self.carrier_freq_hz
            )));
        }
        if !(self.report_rate_hz > 0.0) || self.report_rate_hz > 2.0 * self.carrier_freq_hz {
            return Err(Error::parameter(format!(
                "report rate {} Hz must lie in (0, {}] Hz",
                self.report_rate_hz,
                2.0 * self.carrier_freq_hz
            )));
        }
        if self.filter_mode == FilterMode::BoxcarAverage {
            let tau = 1.0 / (2.0 * self.carrier_freq_hz);
            if (self.avg_window_s - tau).abs() > 1e-9 * tau {
                return Err(Error::parameter(format!(
                    "boxcar window {} s must equal one second-harmonic period {} s",
                    self.avg_window_s, tau
                )));
            }
        } else if !(self.avg_window_s > 0.0) {
            return Err(Error::parameter("averaging window must be > 0".to_string()));
        }
        Ok(())
    }
}

/// Detected envelope (or any stream formatted like one) at the report rate.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSeries {
    /// Envelope values, volts.
    pub values_v: Vec<f64>,
    pub rate_hz: f64,
    pub t0_s: f64,
}

impl EnvelopeSeries {
    pub fn new(values_v: Vec<f64>, rate_hz: f64, t0_s: f64) -> Result<Self> {
        if !(rate_hz > 0.0) || !rate_hz.is_finite() {
            return Err(Error::parameter(format!(
                "envelope rate must be > 0, got {rate_hz}"
            )));
        }
        if let Some(i) = values_v.iter().position(|v| !v.is_finite()) {
            return Err(Error::parameter(format!(
                "envelope value {i} is not finite ({})",
                values_v[i]
            )));
        }
        Ok(Self {
            values_v,
            rate_hz,
            t0_s,
        })
    }

    pub fn len(&self) -> usize {
        self.values_v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values_v.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.values_v.is_empty() {
            return 0.0;
        }
        self.values_v.iter().sum::<f64>() / self.values_v.len() as f64
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.t0_s + i as f64 / self.rate_hz
    }

    /// View as a generic signal (shares the same numbers).
    pub fn to_signal(&self) -> SampledSignal {
        SampledSignal {
            samples: self.values_v.clone(),
            sample_rate_hz: self.rate_hz,
            t0_s: self.t0_s,
        }
    }

    /// Envelope divided by the nominal amplitude (the trace plotted around 1).
    pub fn normalized(&self, a0: f64) -> Vec<f64> {
        self.values_v.iter().map(|v| v / a0).collect()
    }
}

/// Multiply the line voltage by the phase-locked reference:
/// `2 * line(t) * sin(2π f t + φ)`.
///
/// For an amplitude `a(t)` input this yields
/// `a(t) - a(t) cos(2π·2f·t + 2φ)`: the envelope at baseband plus a
/// second-harmonic image the averaging stage removes.
pub fn synchronous_demodulate(line: &SampledSignal, cfg: &SensorConfig) -> Result<SampledSignal> {
    cfg.validate()?;
    if line.sample_rate_hz < 10.0 * cfg.carrier_freq_hz {
        return Err(Error::parameter(format!(
            "sample rate {} Hz too low for {} Hz synchronous detection (need >= 10x)",
            line.sample_rate_hz, cfg.carrier_freq_hz
        )));
    }
    let w = 2.0 * PI * cfg.carrier_freq_hz / line.sample_rate_hz;
    let phase = cfg.carrier_phase_rad + cfg.phase_error_rad;
    let samples = line
        .samples
        .iter()
        .enumerate()
        .map(|(i, &v)| 2.0 * v * (w * i as f64 + phase).sin())
        .collect();
    SampledSignal::new(samples, line.sample_rate_hz, line.t0_s)
}

/// Average a full-rate signal over the sensor window and decimate it onto the
/// report grid. This is the exact resampling the boxcar envelope path uses,
/// so a reference noise passed through it lands on the same grid as the
/// sensor reports.
pub fn to_report_grid(x: &SampledSignal, cfg: &SensorConfig) -> Result<SampledSignal> {
    let averaged = moving_average(x, cfg.avg_window_s)?;
    let factor = decimation_factor(x.sample_rate_hz, cfg.report_rate_hz)?;
    decimate(&averaged, factor)
}

fn decimation_factor(fs: f64, report_rate_hz: f64) -> Result<usize> {
    let exact = fs / report_rate_hz;
    let d = exact.round();
    if (exact - d).abs() > 1e-9 || d < 1.0 {
        return Err(Error::parameter(format!(
            "sample rate {fs} Hz is not an integer multiple of the report rate {report_rate_hz} Hz"
        )));
    }
    Ok(d as usize)
}

/// Recover the envelope from the demodulated signal.
///
/// Boxcar mode averages over exactly one second-harmonic period and
/// decimates; every report is a full-window average, so the first report is
/// stamped at `t0 + τ` and the count is `duration * report_rate`. Lowpass
/// mode filters with a linear-phase FIR and emits the group-delay-compensated
/// samples that land on the report grid, trimming the filter warmup.
pub fn extract_envelope(demod: &SampledSignal, cfg: &SensorConfig) -> Result<EnvelopeSeries> {
    cfg.validate()?;
    match cfg.filter_mode {
        FilterMode::BoxcarAverage => {
            let env = to_report_grid(demod, cfg)?;
            EnvelopeSeries::new(env.samples, env.sample_rate_hz, env.t0_s)
        }
        FilterMode::Lowpass => extract_envelope_lowpass(demod, cfg),
    }
}

/// Re-label the detected envelope as the wire-bound sensor report. The
/// values are identical; downstream modules consume this named artifact.
pub fn sensor_report(env: &EnvelopeSeries) -> EnvelopeSeries {
    env.clone()
}

// Lowpass path: Blackman-windowed sinc. The transition band from the noise
// band (~1 Hz) up to 2f - B (~119 Hz) is huge, so a moderate tap count
// reaches a deep stopband at the second harmonic.
const FIR_TAPS: usize = 401;
const FIR_CUTOFF_HZ: f64 = 30.0;

fn lowpass_taps(fs: f64) -> Vec<f64> {
    let m = (FIR_TAPS - 1) as f64;
    let fc = FIR_CUTOFF_HZ / fs;
    let mut taps: Vec<f64> = (0..FIR_TAPS)
        .map(|i| {
            let k = i as f64 - m / 2.0;
            let sinc = if k == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * k).sin() / (PI * k)
            };
            let x = 2.0 * PI * i as f64 / m;
            let blackman = 0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos();
            sinc * blackman
        })
        .collect();
    let gain: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= gain;
    }
    taps
}

fn extract_envelope_lowpass(demod: &SampledSignal, cfg: &SensorConfig) -> Result<EnvelopeSeries> {
    let fs = demod.sample_rate_hz;
    let d = decimation_factor(fs, cfg.report_rate_hz)?;
    if demod.len() < FIR_TAPS + d {
        return Err(Error::parameter(format!(
            "signal of {} samples too short for the {FIR_TAPS}-tap envelope filter",
            demod.len()
        )));
    }
    let taps = lowpass_taps(fs);
    let delay = (FIR_TAPS - 1) / 2;

    // Emit outputs whose compensated time (i - delay)/fs lands on the report
    // grid: i = m*d + delay with the full filter span inside the signal.
    let m_first = (FIR_TAPS - 1 - delay).div_ceil(d);
    let m_last = (demod.len() - 1 - delay) / d;
    let mut values = Vec::with_capacity(m_last - m_first + 1);
    for m in m_first..=m_last {
        let i = m * d + delay;
        let mut acc = 0.0;
        for (k, t) in taps.iter().enumerate() {
            acc += t * demod.samples[i - k];
        }
        values.push(acc);
    }
    EnvelopeSeries::new(
        values,
        cfg.report_rate_hz,
        demod.t0_s + m_first as f64 / cfg.report_rate_hz,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{apply_watermark_modulation, synth_line_voltage, GridParams};
    use crate::signal::{gen_bandlimited_gaussian, pearson_corr, NoiseSpec};

    fn paper_noises(duration: f64, fs: f64) -> (SampledSignal, SampledSignal) {
        let nw = gen_bandlimited_gaussian(&NoiseSpec::new(0.3, 1.0, 101).unwrap(), duration, fs)
            .unwrap();
        let np = gen_bandlimited_gaussian(&NoiseSpec::new(0.2, 0.5, 202).unwrap(), duration, fs)
            .unwrap();
        (nw, np)
    }

    #[test]
    fn demod_of_pure_carrier_has_dc_and_second_harmonic() {
        let g = GridParams::new(100.0, 60.0, 0.25).unwrap();
        let line = synth_line_voltage(&g, 1.0, 6000.0).unwrap();
        let cfg = SensorConfig::for_carrier(60.0, 0.25);
        let demod = synchronous_demodulate(&line, &cfg).unwrap();
        // 2 a0 sin^2 = a0 (1 - cos(2w t + 2phi)).
        for (i, &v) in demod.samples.iter().enumerate().take(500) {
            let expect =
                100.0 * (1.0 - (2.0 * PI * 120.0 * i as f64 / 6000.0 + 0.5).cos());
            assert!((v - expect).abs() < 1e-9 * 100.0, "sample {i}");
        }
        assert!((demod.mean() - 100.0).abs() < 1e-9 * 100.0);
    }

    #[test]
    fn demod_of_zero_is_zero() {
        let zero = SampledSignal::new(vec![0.0; 6000], 6000.0, 0.0).unwrap();
        let cfg = SensorConfig::for_carrier(60.0, 0.0);
        let demod = synchronous_demodulate(&zero, &cfg).unwrap();
        assert!(demod.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn demod_rejects_low_sample_rate() {
        let g = GridParams::new(1.0, 60.0, 0.0).unwrap();
        let line = synth_line_voltage(&g, 1.0, 500.0).unwrap();
        let cfg = SensorConfig::for_carrier(60.0, 0.0);
        assert!(synchronous_demodulate(&line, &cfg).is_err());
    }

    #[test]
    fn ripple_rejection_on_clean_carrier() {
        let g = GridParams::from_rms(100e3, 60.0, 0.4).unwrap();
        let line = synth_line_voltage(&g, 2.0, 6000.0).unwrap();
        let cfg = SensorConfig::for_carrier(60.0, 0.4);
        let env = extract_envelope(&synchronous_demodulate(&line, &cfg).unwrap(), &cfg).unwrap();
        for &v in &env.values_v {
            assert!((v - g.a0_peak_v).abs() < 1e-6 * g.a0_peak_v);
        }
        // Rate contract: full-window reports only, starting one window in.
        assert_eq!(env.len(), 240);
        assert!((env.t0_s - 1.0 / 120.0).abs() < 1e-15);
        assert!((env.rate_hz - 120.0).abs() < 1e-12);
    }

    #[test]
    fn envelope_roundtrip_recovers_watermark() {
        let fs = 6000.0;
        let duration = 30.0;
        let g = GridParams::from_rms(100e3, 60.0, 0.0).unwrap();
        let (nw, np) = paper_noises(duration, fs);
        let line = apply_watermark_modulation(&g, &nw, &np, duration, fs).unwrap();
        let cfg = SensorConfig::for_carrier(60.0, 0.0);
        let env = extract_envelope(&synchronous_demodulate(&line, &cfg).unwrap(), &cfg).unwrap();

        // Compare against the injected noise sum brought onto the same grid.
        let sum = SampledSignal::new(
            nw.samples
                .iter()
                .zip(&np.samples)
                .map(|(&a, &b)| a + b)
                .collect(),
            fs,
            0.0,
        )
        .unwrap();
        let reference = to_report_grid(&sum, &cfg).unwrap();
        let recovered = SampledSignal::new(
            env.values_v
                .iter()
                .map(|&v| v / g.a0_peak_v - 1.0)
                .collect(),
            env.rate_hz,
            env.t0_s,
        )
        .unwrap();
        let corr = pearson_corr(&recovered, &reference).unwrap();
        assert!(corr > 0.999, "corr = {corr}");

        // Gain accuracy: report mean tracks a0 (1 + mean noise); the
        // generator is zero-mean by construction.
        assert!((env.mean() - g.a0_peak_v).abs() < 1e-3 * g.a0_peak_v);
    }

    #[test]
    fn lowpass_mode_matches_boxcar_recovery() {
        let fs = 6000.0;
        let duration = 30.0;
        let g = GridParams::from_rms(100e3, 60.0, 0.0).unwrap();
        let (nw, np) = paper_noises(duration, fs);
        let line = apply_watermark_modulation(&g, &nw, &np, duration, fs).unwrap();

        let mut cfg = SensorConfig::for_carrier(60.0, 0.0);
        cfg.filter_mode = FilterMode::Lowpass;
        let env = extract_envelope(&synchronous_demodulate(&line, &cfg).unwrap(), &cfg).unwrap();

        // Correlate against the injected sum sampled on the same grid.
        let boxcar = SensorConfig::for_carrier(60.0, 0.0);
        let sum = SampledSignal::new(
            nw.samples
                .iter()
                .zip(&np.samples)
                .map(|(&a, &b)| a + b)
                .collect(),
            fs,
            0.0,
        )
        .unwrap();
        let reference_full = to_report_grid(&sum, &boxcar).unwrap();
        // Trim the reference to the lowpass output's grid span.
        let offset = ((env.t0_s - reference_full.t0_s) * env.rate_hz).round() as usize;
        let reference = SampledSignal::new(
            reference_full.samples[offset..offset + env.len()].to_vec(),
            env.rate_hz,
            env.t0_s,
        )
        .unwrap();
        let recovered = SampledSignal::new(
            env.values_v
                .iter()
                .map(|&v| v / g.a0_peak_v - 1.0)
                .collect(),
            env.rate_hz,
            env.t0_s,
        )
        .unwrap();
        let corr = pearson_corr(&recovered, &reference).unwrap();
        assert!(corr > 0.99, "lowpass corr = {corr}");

        // Gain accuracy over the matching window: the trimmed lowpass span
        // no longer averages the noise to exactly zero, so compare against
        // the reference mean rather than bare a0.
        let expect = g.a0_peak_v * (1.0 + reference.mean());
        assert!(
            (env.mean() - expect).abs() < 1e-3 * g.a0_peak_v,
            "mean {} vs {}",
            env.mean(),
            expect
        );
    }

    #[test]
    fn static_phase_error_scales_envelope() {
        let g = GridParams::new(1000.0, 60.0, 0.0).unwrap();
        let line = synth_line_voltage(&g, 2.0, 6000.0).unwrap();
        let mut cfg = SensorConfig::for_carrier(60.0, 0.0);
        cfg.phase_error_rad = 0.3;
        let env = extract_envelope(&synchronous_demodulate(&line, &cfg).unwrap(), &cfg).unwrap();
        let expect = 1000.0 * 0.3f64.cos();
        assert!((env.mean() - expect).abs() < 1e-6 * expect);
    }

    #[test]
    fn misaligned_rates_rejected() {
        let g = GridParams::new(1.0, 60.0, 0.0).unwrap();
        // 6100 Hz is not divisible by 120: the boxcar window is fractional.
        let line = synth_line_voltage(&g, 1.0, 6100.0).unwrap();
        let cfg = SensorConfig::for_carrier(60.0, 0.0);
        let demod = synchronous_demodulate(&line, &cfg).unwrap();
        assert!(extract_envelope(&demod, &cfg).is_err());
    }

    #[test]
    fn sensor_report_is_identity() {
        let env = EnvelopeSeries::new(vec![1.0, 2.0, 3.0], 120.0, 0.0).unwrap();
        let s = sensor_report(&env);
        assert_eq!(s, env);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SensorConfig::for_carrier(60.0, 0.0);
        assert!(cfg.validate().is_ok());
        cfg.avg_window_s = 0.01;
        assert!(cfg.validate().is_err());
        let mut cfg = SensorConfig::for_carrier(60.0, 0.0);
        cfg.report_rate_hz = 240.0;
        assert!(cfg.validate().is_err());
    }
}
