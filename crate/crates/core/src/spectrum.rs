//! Power spectral density estimation (Welch, Hann window) and band-power
//! integration for real signals.

use rustfft::{num_complex::Complex64, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

/// One-sided PSD estimate on a uniform frequency grid `0..=fs/2`.
#[derive(Debug, Clone)]
pub struct PsdEstimate {
    pub freqs_hz: Vec<f64>,
    /// Power per Hz at each grid frequency.
    pub psd: Vec<f64>,
    /// Grid spacing `fs / segment_len`, Hz.
    pub resolution_hz: f64,
}

impl PsdEstimate {
    pub fn max_freq_hz(&self) -> f64 {
        *self.freqs_hz.last().unwrap_or(&0.0)
    }

    /// Total power: integral of the PSD over the full band.
    pub fn total_power(&self) -> f64 {
        trapezoid(&self.freqs_hz, &self.psd, 0.0, self.max_freq_hz())
    }
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = std::f64::consts::PI * i as f64 / (n - 1) as f64;
            let s = x.sin();
            s * s
        })
        .collect()
}

/// Welch averaged-periodogram PSD with a Hann window.
///
/// The estimate is one-sided and normalized so that the integral over
/// `[0, fs/2]` matches the time-domain mean square (Parseval) for stationary
/// input; no detrending is applied, so DC power stays visible.
pub fn psd_welch(
    x: &SampledSignal,
    segment_len: usize,
    overlap_fraction: f64,
) -> Result<PsdEstimate> {
    if segment_len < 4 {
        return Err(Error::parameter(format!(
            "segment_len must be >= 4, got {segment_len}"
        )));
    }
    if segment_len > x.len() {
        return Err(Error::parameter(format!(
            "segment_len {} exceeds signal length {}",
            segment_len,
            x.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::parameter(format!(
            "overlap_fraction must be in [0, 1), got {overlap_fraction}"
        )));
    }

    let fs = x.sample_rate_hz;
    let n = segment_len;
    let step = ((n as f64) * (1.0 - overlap_fraction)).round().max(1.0) as usize;
    let window = hann(n);
    let window_power: f64 = window.iter().map(|w| w * w).sum();

    let n_out = n / 2 + 1;
    let mut acc = vec![0.0f64; n_out];
    let mut n_segments = 0usize;

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];

    let mut start = 0usize;
    while start + n <= x.len() {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(x.samples[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        for k in 0..n_out {
            let mag_sq = buf[k].norm_sqr();
            // One-sided: interior bins carry the mirrored half too.
            let fold = if k == 0 || (n % 2 == 0 && k == n / 2) {
                1.0
            } else {
                2.0
            };
            acc[k] += fold * mag_sq;
        }
        n_segments += 1;
        start += step;
    }

    let scale = 1.0 / (fs * window_power * n_segments as f64);
    let resolution_hz = fs / n as f64;
    let psd: Vec<f64> = acc.iter().map(|p| p * scale).collect();
    let freqs_hz: Vec<f64> = (0..n_out).map(|k| k as f64 * resolution_hz).collect();

    Ok(PsdEstimate {
        freqs_hz,
        psd,
        resolution_hz,
    })
}

/// Integrate `psd` over `[f_lo, f_hi]` with the trapezoid rule, interpolating
/// linearly at band edges that fall between grid points.
pub fn band_power(p: &PsdEstimate, f_lo: f64, f_hi: f64) -> Result<f64> {
    if !(f_lo >= 0.0) || f_lo >= f_hi {
        return Err(Error::parameter(format!(
            "band [{f_lo}, {f_hi}] must satisfy 0 <= f_lo < f_hi"
        )));
    }
    let fmax = p.max_freq_hz();
    if f_hi > fmax * (1.0 + 1e-9) {
        return Err(Error::parameter(format!(
            "band edge {f_hi} Hz beyond maximum frequency {fmax} Hz"
        )));
    }
    Ok(trapezoid(&p.freqs_hz, &p.psd, f_lo, f_hi.min(fmax)))
}

/// Trapezoid integral of tabulated `(f, y)` over `[a, b]` on a uniform
/// ascending grid.
fn trapezoid(freqs: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    if freqs.len() < 2 || b <= a {
        return 0.0;
    }
    let df = freqs[1] - freqs[0];
    let value_at = |f: f64| -> f64 {
        let pos = (f - freqs[0]) / df;
        let i = pos.floor().clamp(0.0, (y.len() - 2) as f64) as usize;
        let frac = (pos - i as f64).clamp(0.0, 1.0);
        y[i] * (1.0 - frac) + y[i + 1] * frac
    };
    // Grid points strictly inside (a, b).
    let first = ((a - freqs[0]) / df).ceil() as isize;
    let last = ((b - freqs[0]) / df).floor() as isize;
    let first = first.max(0) as usize;
    let last = (last.min(y.len() as isize - 1)).max(0) as usize;

    let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(last.saturating_sub(first) + 3);
    nodes.push((a, value_at(a)));
    for k in first..=last {
        let f = freqs[k];
        if f > a + 1e-12 * df && f < b - 1e-12 * df {
            nodes.push((f, y[k]));
        }
    }
    nodes.push((b, value_at(b)));

    let mut sum = 0.0;
    for w in nodes.windows(2) {
        sum += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
    }
    sum
}
