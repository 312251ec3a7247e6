//! `gridmark`: scenario runner, Monte-Carlo experiments, threshold
//! calibration, and spectral reports for the dynamic-watermarking simulator.
//!
//! Exit codes: 0 success, 2 configuration error, 3 i/o error, 4 degenerate
//! input (strict mode), 5 parameter error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gridmark_core::{
    band_power, calibrate_threshold, csvio, emit_outputs, psd_welch, run_monte_carlo,
    run_scenario, ArmSpec, AttackKind, Error, Result, ScenarioConfig,
};

#[derive(Parser)]
#[command(
    name = "gridmark",
    version,
    about = "Dynamic-watermarking grid simulator: signal chain, detector, and sensor-splice attack",
    after_help = "Configuration precedence: preset/defaults, then --config file, then --set \
                  overrides, then --seed/--out-dir. Keys use dotted paths, e.g. \
                  `--set detector.t0_s=30`."
)]
struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in preset: figure_suite or figure12_attack.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Output directory (overrides the configured out_dir).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Master seed (overrides the configured master_seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override one configuration key (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario end to end and emit traces, plots, and the verdict.
    Simulate,
    /// Run one scenario with the attack splice enabled.
    Attack {
        /// Level scale alpha.
        #[arg(long)]
        alpha: Option<f64>,
        /// Watermark-noise scale beta.
        #[arg(long)]
        beta: Option<f64>,
        /// Parasitic-noise scale gamma.
        #[arg(long)]
        gamma: Option<f64>,
        /// Fake kind: naive, proportional, or split_noise.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Detection-rate experiment over independently seeded trials.
    Montecarlo {
        /// Trials per arm.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Arm spec (repeatable): none, naive:A, proportional:K, split:A,B,G.
        #[arg(long = "arm", value_name = "SPEC")]
        arms: Vec<String>,
    },
    /// Pick a detection threshold for a target false-alarm rate.
    Calibrate {
        /// Trials per arm.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Target false-alarm rate in (0, 1).
        #[arg(long, default_value_t = 0.05)]
        target_far: f64,
        /// Attack arm to calibrate against.
        #[arg(long, default_value = "naive:1.0")]
        arm: String,
    },
    /// Welch PSD report for any emitted trace CSV.
    Psd {
        /// Input trace (`t_s,<value>` schema).
        trace: PathBuf,
        /// Welch segment length in samples.
        #[arg(long, default_value_t = 60_000)]
        segment_len: usize,
        /// Segment overlap fraction in [0, 1).
        #[arg(long, default_value_t = 0.5)]
        overlap: f64,
    },
}

fn resolve_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match (&cli.preset, &cli.config) {
        (Some(name), _) => ScenarioConfig::preset(name)?,
        (None, Some(path)) => ScenarioConfig::from_file(path)?,
        (None, None) => ScenarioConfig::default(),
    };
    for kv in &cli.sets {
        let (key, value) = kv.split_once('=').ok_or_else(|| {
            Error::config(kv.clone(), "--set expects KEY=VALUE".to_string())
        })?;
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    Ok(cfg)
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn simulate(cfg: &ScenarioConfig) -> Result<()> {
    let bundle = run_scenario(cfg)?;
    print_warnings(&bundle.warnings);
    let manifest = emit_outputs(&bundle, &cfg.out_dir)?;
    println!(
        "wrote {} files to {}",
        manifest.files.len() + 1,
        cfg.out_dir.display()
    );
    match &bundle.verdict {
        Some(v) => println!(
            "verdict: D_w = {:.4}, mean ratio = {:.4}, variance ratio = {:.4}, decision = {}, \
             classification = {}",
            v.d_w,
            v.reported_mean_ratio,
            v.variance_ratio,
            v.decision,
            gridmark_core::classify(v)
        ),
        None => println!("verdict: skipped (degenerate input; see warnings)"),
    }
    Ok(())
}

fn montecarlo(cfg: &ScenarioConfig, trials: usize, arm_specs: &[String]) -> Result<()> {
    let arms: Vec<ArmSpec> = if arm_specs.is_empty() {
        vec![
            ArmSpec::None,
            ArmSpec::Naive { alpha: 1.0 },
            ArmSpec::Proportional { scale: 0.5 },
        ]
    } else {
        arm_specs
            .iter()
            .map(|s| ArmSpec::parse(s))
            .collect::<Result<_>>()?
    };
    let (summary, samples) = run_monte_carlo(cfg, trials, &arms)?;

    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Error::io(cfg.out_dir.display().to_string(), e))?;
    let json_path = cfg.out_dir.join("mc_summary.json");
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::parameter(format!("summary serialization: {e}")))?;
    std::fs::write(&json_path, json + "\n")
        .map_err(|e| Error::io(json_path.display().to_string(), e))?;

    let csv_path = cfg.out_dir.join("mc_samples.csv");
    let mut out = String::from("arm,trial,d_w,variance_ratio,fault_flag,classification\n");
    for s in &samples {
        for i in 0..s.d_w.len() {
            writeln!(
                out,
                "{},{},{:.12e},{:.12e},{},{}",
                s.arm, i, s.d_w[i], s.variance_ratio[i], s.fault_flag[i], s.classification[i]
            )
            .expect("string write");
        }
    }
    std::fs::write(&csv_path, out).map_err(|e| Error::io(csv_path.display().to_string(), e))?;

    println!(
        "{} trials/arm at T0 = {} s, threshold {} (false-alarm rate {:.3})",
        summary.trials, summary.t0_s, summary.threshold_used, summary.false_alarm_rate
    );
    println!(
        "{:<28} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "arm", "mean", "std", "det", "varflag", "fault", "class(N/A/F)"
    );
    for a in &summary.arms {
        println!(
            "{:<28} {:>8.4} {:>8.4} {:>8.3} {:>8.3} {:>8.3} {:>5}/{}/{}",
            a.arm,
            a.d_w_mean,
            a.d_w_std,
            a.detection_rate,
            a.variance_flag_rate,
            a.fault_flag_rate,
            a.n_no_attack,
            a.n_attack,
            a.n_fault_suspected
        );
    }
    println!(
        "wrote {} and {}",
        json_path.display(),
        csv_path.display()
    );
    Ok(())
}

fn calibrate(cfg: &ScenarioConfig, trials: usize, target_far: f64, arm: &str) -> Result<()> {
    let attack_arm = ArmSpec::parse(arm)?;
    let (_, samples) = run_monte_carlo(cfg, trials, &[ArmSpec::None, attack_arm])?;
    let cal = calibrate_threshold(&samples[0].d_w, &samples[1].d_w, target_far)?;
    if cal.warning {
        eprintln!(
            "warning: distributions overlap; threshold {:.4} is best-effort (miss rate {:.3})",
            cal.threshold, cal.miss_rate
        );
    }
    println!(
        "threshold = {:.4} (target FAR {:.3}: achieved {:.3}, miss rate vs {} = {:.3})",
        cal.threshold, target_far, cal.achieved_far, samples[1].arm, cal.miss_rate
    );
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Error::io(cfg.out_dir.display().to_string(), e))?;
    let path = cfg.out_dir.join("calibration.json");
    let json = serde_json::to_string_pretty(&cal)
        .map_err(|e| Error::parameter(format!("calibration serialization: {e}")))?;
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(path.display().to_string(), e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn psd_report(cfg: &ScenarioConfig, trace: &PathBuf, segment_len: usize, overlap: f64) -> Result<()> {
    let signal = csvio::read_signal_csv(trace)?;
    let seg = segment_len.min(signal.len());
    let p = psd_welch(&signal, seg, overlap)?;

    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Error::io(cfg.out_dir.display().to_string(), e))?;
    let stem = trace
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("trace");
    let csv_path = cfg.out_dir.join(format!("{stem}_psd.csv"));
    csvio::write_psd_csv(&csv_path, &p)?;
    let svg_path = cfg.out_dir.join(format!("{stem}_psd.svg"));
    let db: Vec<f64> = p.psd.iter().map(|&v| 10.0 * v.max(1e-300).log10()).collect();
    gridmark_core::plot::LinePlot {
        title: &format!("PSD of {stem}"),
        x_label: "f (Hz)",
        y_label: "PSD (dB/Hz)",
        xs: &p.freqs_hz,
        ys: &db,
    }
    .write_svg(&svg_path)?;

    let total = p.total_power();
    let peak = p
        .psd
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| p.freqs_hz[i])
        .unwrap_or(0.0);
    println!(
        "{}: {} samples at {:.1} Hz; resolution {:.4} Hz; total power {:.6e}; peak at {:.2} Hz",
        trace.display(),
        signal.len(),
        signal.sample_rate_hz,
        p.resolution_hz,
        total,
        peak
    );
    // A quick look at the grid band.
    if p.max_freq_hz() >= 61.0 {
        let band = band_power(&p, 59.0, 61.0)?;
        println!("power in [59, 61] Hz: {band:.6e} ({:.2}% of total)", 100.0 * band / total);
    }
    println!("wrote {} and {}", csv_path.display(), svg_path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Simulate => simulate(&cfg),
        Command::Attack {
            alpha,
            beta,
            gamma,
            mode,
        } => {
            cfg.attack.enabled = true;
            if let Some(a) = alpha {
                cfg.attack.alpha = *a;
            }
            if let Some(b) = beta {
                cfg.attack.beta = *b;
            }
            if let Some(g) = gamma {
                cfg.attack.gamma = *g;
            }
            if let Some(m) = mode {
                cfg.set("attack.mode", m)?;
            }
            if cfg.attack.kind == AttackKind::Proportional && cfg.attack.beta != cfg.attack.gamma
            {
                return Err(Error::config(
                    "attack.beta",
                    "proportional mode requires beta == gamma (the tap observes only the noise sum)"
                        .to_string(),
                ));
            }
            simulate(&cfg)
        }
        Command::Montecarlo { trials, arms } => montecarlo(&cfg, *trials, arms),
        Command::Calibrate {
            trials,
            target_far,
            arm,
        } => calibrate(&cfg, *trials, *target_far, arm),
        Command::Psd {
            trace,
            segment_len,
            overlap,
        } => psd_report(&cfg, trace, *segment_len, *overlap),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => 2,
        Error::Io { .. } => 3,
        Error::Degenerate(_) => 4,
        Error::Parameter(_) => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
