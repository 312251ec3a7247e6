//! CSV emission and parsing for the project-wide trace schemas.
//!
//! All numeric fields are written as `{:.12e}`, giving 13 significant digits
//! so written traces reconstruct their doubles to within one ulp and reruns
//! are byte-identical.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::detector::{classify, DetectorVerdict};
use crate::error::{Error, Result};
use crate::sensor::EnvelopeSeries;
use crate::signal::SampledSignal;

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(BufWriter::with_capacity(1 << 20, file))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

/// Write a time series under the `t_s,value` schema.
pub fn write_signal_csv(path: &Path, x: &SampledSignal) -> Result<()> {
    let mut w = create(path)?;
    let io_err = |e| Error::io(path.display().to_string(), e);
    writeln!(w, "t_s,value").map_err(io_err)?;
    for (i, &v) in x.samples.iter().enumerate() {
        let t = x.time_at(i);
        writeln!(w, "{t:.12e},{v:.12e}").map_err(io_err)?;
    }
    finish(w, path)
}

/// Write an envelope under `t_s,envelope_v`, or `t_s,envelope_norm` when a
/// normalization amplitude is given.
pub fn write_envelope_csv(path: &Path, env: &EnvelopeSeries, normalize_by: Option<f64>) -> Result<()> {
    let mut w = create(path)?;
    let io_err = |e| Error::io(path.display().to_string(), e);
    match normalize_by {
        None => {
            writeln!(w, "t_s,envelope_v").map_err(io_err)?;
            for (i, &v) in env.values_v.iter().enumerate() {
                let t = env.time_at(i);
                writeln!(w, "{t:.12e},{v:.12e}").map_err(io_err)?;
            }
        }
        Some(a0) => {
            writeln!(w, "t_s,envelope_norm").map_err(io_err)?;
            for (i, &v) in env.values_v.iter().enumerate() {
                let t = env.time_at(i);
                let n = v / a0;
                writeln!(w, "{t:.12e},{n:.12e}").map_err(io_err)?;
            }
        }
    }
    finish(w, path)
}

/// Write a PSD under the `f_hz,psd` schema.
pub fn write_psd_csv(path: &Path, p: &crate::spectrum::PsdEstimate) -> Result<()> {
    let mut w = create(path)?;
    let io_err = |e| Error::io(path.display().to_string(), e);
    writeln!(w, "f_hz,psd").map_err(io_err)?;
    for (&f, &v) in p.freqs_hz.iter().zip(&p.psd) {
        writeln!(w, "{f:.12e},{v:.12e}").map_err(io_err)?;
    }
    finish(w, path)
}

/// Write a one-row verdict file.
pub fn write_verdict_csv(path: &Path, v: &DetectorVerdict, t0_s: f64) -> Result<()> {
    let mut w = create(path)?;
    let io_err = |e| Error::io(path.display().to_string(), e);
    writeln!(
        w,
        "t0_s,d_w,reported_mean_ratio,variance_ratio,decision,fault_flag,classification"
    )
    .map_err(io_err)?;
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        num(t0_s),
        num(v.d_w),
        num(v.reported_mean_ratio),
        num(v.variance_ratio),
        v.decision,
        v.fault_flag,
        classify(v)
    )
    .map_err(io_err)?;
    finish(w, path)
}

/// Read any two-column `t_s,<name>` trace back as a signal. The time column
/// must be uniform; the sample rate is recovered from its spacing.
pub fn read_signal_csv(path: &Path) -> Result<SampledSignal> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if lineno == 0 {
            if !line.starts_with("t_s,") {
                return Err(Error::parameter(format!(
                    "`{}`: expected a `t_s,<value>` header, got `{line}`",
                    path.display()
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (t, v) = line.split_once(',').ok_or_else(|| {
            Error::parameter(format!("`{}` line {}: not a CSV row", path.display(), lineno + 1))
        })?;
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| {
                Error::parameter(format!(
                    "`{}` line {}: `{s}` is not a number",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        times.push(parse(t)?);
        values.push(parse(v)?);
    }
    if times.len() < 2 {
        return Err(Error::parameter(format!(
            "`{}` holds fewer than 2 samples",
            path.display()
        )));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::parameter(format!(
            "`{}`: time column is not increasing",
            path.display()
        )));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(Error::parameter(format!(
                "`{}`: time column is not uniformly spaced",
                path.display()
            )));
        }
    }
    SampledSignal::new(values, 1.0 / dt, times[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{Decision, DetectorVerdict};

    #[test]
    fn signal_roundtrip_preserves_samples_and_rate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let x = SampledSignal::new(vec![1.5, -2.25, 0.125, 3.0], 120.0, 1.0 / 120.0).unwrap();
        write_signal_csv(&path, &x).unwrap();
        let back = read_signal_csv(&path).unwrap();
        assert_eq!(back.samples, x.samples);
        assert!((back.sample_rate_hz - 120.0).abs() < 1e-6);
        assert!((back.t0_s - x.t0_s).abs() < 1e-12);
    }

    #[test]
    fn headers_match_schemas() {
        let dir = tempfile::tempdir().unwrap();
        let env = EnvelopeSeries::new(vec![1.0, 2.0], 120.0, 0.0).unwrap();

        let p = dir.path().join("env.csv");
        write_envelope_csv(&p, &env, None).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t_s,envelope_v\n"));

        let p = dir.path().join("env_norm.csv");
        write_envelope_csv(&p, &env, Some(2.0)).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t_s,envelope_norm\n"));

        let p = dir.path().join("verdict.csv");
        let v = DetectorVerdict {
            d_w: 0.987,
            reported_mean_ratio: 1.001,
            decision: Decision::WatermarkPresent,
            fault_flag: false,
            variance_ratio: 0.95,
        };
        write_verdict_csv(&p, &v, 60.0).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text
            .starts_with("t0_s,d_w,reported_mean_ratio,variance_ratio,decision,fault_flag,classification\n"));
        assert!(text.contains("WATERMARK_PRESENT"));
        assert!(text.contains("NO_ATTACK"));
    }

    #[test]
    fn writes_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let x = SampledSignal::new((0..100).map(|i| (i as f64).sin()).collect(), 50.0, 0.0)
            .unwrap();
        write_signal_csv(&a, &x).unwrap();
        write_signal_csv(&b, &x).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn malformed_csv_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "wrong,header\n0,1\n").unwrap();
        assert!(read_signal_csv(&p).is_err());
        std::fs::write(&p, "t_s,value\n0.0,1.0\n0.1,2.0\n0.35,3.0\n").unwrap();
        assert!(read_signal_csv(&p).is_err(), "non-uniform spacing");
    }
}
