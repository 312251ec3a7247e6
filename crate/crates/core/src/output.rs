//! Trace, plot, and manifest emission for scenario runs.
//!
//! Every CSV is rewritten deterministically on re-run; the manifest lists the
//! emitted files together with the fully resolved configuration.

use std::path::{Path, PathBuf};

use crate::config::ScenarioConfig;
use crate::csvio;
use crate::error::{Error, Result};
use crate::plot::LinePlot;
use crate::scenario::ScenarioBundle;
use crate::sensor::EnvelopeSeries;
use crate::signal::SampledSignal;

/// One emitted file.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    /// `trace`, `plot`, or `verdict`.
    pub kind: String,
    /// CSV header for data files, `svg` for plots.
    pub schema: String,
    /// Data rows for CSVs, 0 for plots.
    pub rows: usize,
}

/// Run manifest: schema version, resolved config, emitted files, warnings.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config: ScenarioConfig,
    pub files: Vec<ManifestEntry>,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn new(config: ScenarioConfig) -> Self {
        Self {
            schema_version: 1,
            config,
            files: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::parameter(format!("manifest serialization: {e}")))?;
        std::fs::write(&path, json + "\n")
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(path)
    }
}

struct Emitter<'a> {
    out_dir: &'a Path,
    manifest: &'a mut Manifest,
}

impl Emitter<'_> {
    fn trace(&mut self, name: &str, x: &SampledSignal) -> Result<()> {
        csvio::write_signal_csv(&self.out_dir.join(name), x)?;
        self.manifest.files.push(ManifestEntry {
            name: name.to_string(),
            kind: "trace".to_string(),
            schema: "t_s,value".to_string(),
            rows: x.len(),
        });
        Ok(())
    }

    fn envelope(&mut self, name: &str, env: &EnvelopeSeries, normalize_by: Option<f64>) -> Result<()> {
        csvio::write_envelope_csv(&self.out_dir.join(name), env, normalize_by)?;
        self.manifest.files.push(ManifestEntry {
            name: name.to_string(),
            kind: "trace".to_string(),
            schema: if normalize_by.is_some() {
                "t_s,envelope_norm".to_string()
            } else {
                "t_s,envelope_v".to_string()
            },
            rows: env.len(),
        });
        Ok(())
    }

    fn plot(&mut self, name: &str, plot: &LinePlot) -> Result<()> {
        plot.write_svg(&self.out_dir.join(name))?;
        self.manifest.files.push(ManifestEntry {
            name: name.to_string(),
            kind: "plot".to_string(),
            schema: "svg".to_string(),
            rows: 0,
        });
        Ok(())
    }
}

fn times(x: &SampledSignal) -> Vec<f64> {
    (0..x.len()).map(|i| x.time_at(i)).collect()
}

fn env_times(e: &EnvelopeSeries) -> Vec<f64> {
    (0..e.len()).map(|i| e.time_at(i)).collect()
}

/// Write the figure-analog traces, their plots, the verdict, and the
/// manifest. Returns the manifest (also written as `manifest.json`).
pub fn emit_outputs(bundle: &ScenarioBundle, out_dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let mut manifest = Manifest::new(bundle.config.clone());
    manifest.warnings = bundle.warnings.clone();
    let a0 = bundle.config.a0_peak_v();
    let mut em = Emitter {
        out_dir,
        manifest: &mut manifest,
    };

    em.trace("fig05_line_voltage.csv", &bundle.line_voltage)?;
    em.trace("fig06_watermark_noise.csv", &bundle.watermark_noise)?;
    em.trace("fig07_parasitic_noise.csv", &bundle.parasitic_noise)?;
    em.trace("fig08_noise_sum.csv", &bundle.noise_sum)?;
    em.trace("fig09_watermarked_voltage.csv", &bundle.watermarked_voltage)?;
    em.trace("fig10_demodulated.csv", &bundle.demodulated)?;
    em.envelope("fig11_envelope.csv", &bundle.envelope, None)?;
    em.envelope("fig11_envelope_norm.csv", &bundle.envelope, Some(a0))?;
    if let Some(fake) = &bundle.fake_envelope {
        em.envelope("fig12_fake_envelope.csv", fake, None)?;
    }

    // Plots. Carrier-scale traces get a short window so cycles are visible;
    // noise-scale traces span the full run (dense carrier plots collapse to
    // their min-max envelope, which is the informative shape anyway).
    let short = |x: &SampledSignal| ((0.2 * x.sample_rate_hz) as usize).min(x.len());
    let n5 = short(&bundle.line_voltage);
    em.plot(
        "fig05_line_voltage.svg",
        &LinePlot {
            title: "Line voltage (first 0.2 s)",
            x_label: "t (s)",
            y_label: "V_L (V)",
            xs: &times(&bundle.line_voltage)[..n5],
            ys: &bundle.line_voltage.samples[..n5],
        },
    )?;
    em.plot(
        "fig06_watermark_noise.svg",
        &LinePlot {
            title: "Watermark noise N_w",
            x_label: "t (s)",
            y_label: "N_w",
            xs: &times(&bundle.watermark_noise),
            ys: &bundle.watermark_noise.samples,
        },
    )?;
    em.plot(
        "fig07_parasitic_noise.svg",
        &LinePlot {
            title: "Parasitic noise N_p",
            x_label: "t (s)",
            y_label: "N_p",
            xs: &times(&bundle.parasitic_noise),
            ys: &bundle.parasitic_noise.samples,
        },
    )?;
    em.plot(
        "fig08_noise_sum.svg",
        &LinePlot {
            title: "Noise sum N_w + N_p",
            x_label: "t (s)",
            y_label: "N_w + N_p",
            xs: &times(&bundle.noise_sum),
            ys: &bundle.noise_sum.samples,
        },
    )?;
    em.plot(
        "fig09_watermarked_voltage.svg",
        &LinePlot {
            title: "Watermarked line voltage",
            x_label: "t (s)",
            y_label: "V_Lw (V)",
            xs: &times(&bundle.watermarked_voltage),
            ys: &bundle.watermarked_voltage.samples,
        },
    )?;
    em.plot(
        "fig10_demodulated.svg",
        &LinePlot {
            title: "Demodulated signal before averaging",
            x_label: "t (s)",
            y_label: "2 V_Lw sin (V)",
            xs: &times(&bundle.demodulated),
            ys: &bundle.demodulated.samples,
        },
    )?;
    let env_norm = bundle.envelope.normalized(a0);
    em.plot(
        "fig11_envelope_norm.svg",
        &LinePlot {
            title: "Sensor envelope, normalized by a0",
            x_label: "t (s)",
            y_label: "E / a0",
            xs: &env_times(&bundle.envelope),
            ys: &env_norm,
        },
    )?;
    match &bundle.fake_envelope {
        Some(fake) => {
            let fake_norm = fake.normalized(a0);
            em.plot(
                "fig12_fake_envelope_norm.svg",
                &LinePlot {
                    title: "Fake sensor stream, normalized by a0",
                    x_label: "t (s)",
                    y_label: "S_f / a0",
                    xs: &env_times(fake),
                    ys: &fake_norm,
                },
            )?;
        }
        None => {
            // No attack: the eighth plot is the envelope in volts.
            em.plot(
                "fig11_envelope.svg",
                &LinePlot {
                    title: "Sensor envelope",
                    x_label: "t (s)",
                    y_label: "E (V)",
                    xs: &env_times(&bundle.envelope),
                    ys: &bundle.envelope.values_v,
                },
            )?;
        }
    }

    if let Some(v) = &bundle.verdict {
        csvio::write_verdict_csv(
            &out_dir.join("verdict.csv"),
            v,
            bundle.config.detector.t0_s,
        )?;
        manifest.files.push(ManifestEntry {
            name: "verdict.csv".to_string(),
            kind: "verdict".to_string(),
            schema: "t0_s,d_w,reported_mean_ratio,variance_ratio,decision,fault_flag,classification"
                .to_string(),
            rows: 1,
        });
    }

    manifest.write(out_dir)?;
    Ok(manifest)
}
