//! Monte-Carlo detection experiments over independently seeded trials, and
//! threshold calibration against a target false-alarm rate.

use std::time::Instant;

use crate::attack::{extract_noise, naive_attack, synthesize_fake, AttackParams};
use crate::config::ScenarioConfig;
use crate::detector::{classify, crosscorr_detect, Classification};
use crate::error::{Error, Result};
use crate::scenario::simulate_sensor_stream;
use crate::sensor::sensor_report;

/// One experiment arm: which stream the controller gets to see.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum ArmSpec {
    /// The genuine sensor stream.
    None,
    /// Flat watermark-free fake at `alpha * a0`.
    Naive { alpha: f64 },
    /// Proportional fake: level and extracted noise both scaled by `scale`.
    Proportional { scale: f64 },
    /// Component-wise scaled fake (omniscient simulation device).
    Split { alpha: f64, beta: f64, gamma: f64 },
}

impl ArmSpec {
    pub fn label(&self) -> String {
        match self {
            ArmSpec::None => "none".to_string(),
            ArmSpec::Naive { alpha } => format!("naive(alpha={alpha})"),
            ArmSpec::Proportional { scale } => format!("proportional({scale})"),
            ArmSpec::Split { alpha, beta, gamma } => {
                format!("split(alpha={alpha},beta={beta},gamma={gamma})")
            }
        }
    }

    /// Parse the CLI form: `none`, `naive:0.5`, `proportional:0.5`,
    /// `split:1.0,1.0,0.3`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::parameter(format!("arm `{s}`: {msg}"));
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k, Some(r)),
            None => (s, None),
        };
        let one = |rest: Option<&str>, default: f64| -> Result<f64> {
            match rest {
                None => Ok(default),
                Some(r) => r
                    .parse::<f64>()
                    .map_err(|_| bad("expected one numeric parameter")),
            }
        };
        match kind {
            "none" => Ok(ArmSpec::None),
            "naive" => Ok(ArmSpec::Naive {
                alpha: one(rest, 1.0)?,
            }),
            "proportional" => Ok(ArmSpec::Proportional {
                scale: one(rest, 0.5)?,
            }),
            "split" => {
                let r = rest.ok_or_else(|| bad("split needs alpha,beta,gamma"))?;
                let parts: Vec<&str> = r.split(',').collect();
                if parts.len() != 3 {
                    return Err(bad("split needs alpha,beta,gamma"));
                }
                let mut vals = [0.0; 3];
                for (v, p) in vals.iter_mut().zip(&parts) {
                    *v = p
                        .parse::<f64>()
                        .map_err(|_| bad("split parameters must be numeric"))?;
                }
                Ok(ArmSpec::Split {
                    alpha: vals[0],
                    beta: vals[1],
                    gamma: vals[2],
                })
            }
            _ => Err(bad("unknown arm kind")),
        }
    }

    fn needs_components(&self) -> bool {
        matches!(self, ArmSpec::Split { .. })
    }
}

/// Per-arm aggregate statistics.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ArmSummary {
    pub arm: String,
    pub trials: usize,
    pub d_w_mean: f64,
    pub d_w_std: f64,
    pub d_w_min: f64,
    pub d_w_q05: f64,
    pub d_w_median: f64,
    pub d_w_q95: f64,
    pub d_w_max: f64,
    /// Fraction of trials the watermark check called an attack.
    pub detection_rate: f64,
    /// Fraction of trials the variance ratio fell outside its band.
    pub variance_flag_rate: f64,
    pub fault_flag_rate: f64,
    pub n_no_attack: usize,
    pub n_attack: usize,
    pub n_fault_suspected: usize,
}

/// Whole-experiment summary.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ExperimentSummary {
    pub trials: usize,
    pub t0_s: f64,
    pub threshold_used: f64,
    /// Attack rate on the `none` arm, when present.
    pub false_alarm_rate: f64,
    pub arms: Vec<ArmSummary>,
    /// Wall-clock runtime; excluded from the canonical form because it is
    /// not a property of the experiment.
    pub runtime_s: f64,
}

impl ExperimentSummary {
    /// Deterministic rendering of every experiment number (runtime excluded);
    /// equal strings mean equal experiments.
    pub fn canonical_string(&self) -> String {
        let mut s = format!(
            "trials={} t0_s={:?} threshold={:?} far={:?}\n",
            self.trials, self.t0_s, self.threshold_used, self.false_alarm_rate
        );
        for a in &self.arms {
            s.push_str(&format!(
                "{}: mean={:?} std={:?} min={:?} q05={:?} med={:?} q95={:?} max={:?} \
                 det={:?} var={:?} fault={:?} classes={}/{}/{}\n",
                a.arm,
                a.d_w_mean,
                a.d_w_std,
                a.d_w_min,
                a.d_w_q05,
                a.d_w_median,
                a.d_w_q95,
                a.d_w_max,
                a.detection_rate,
                a.variance_flag_rate,
                a.fault_flag_rate,
                a.n_no_attack,
                a.n_attack,
                a.n_fault_suspected
            ));
        }
        s
    }
}

/// Raw per-trial detector outputs for one arm, used by calibration.
#[derive(Debug, Clone)]
pub struct ArmSamples {
    pub arm: String,
    pub d_w: Vec<f64>,
    pub variance_ratio: Vec<f64>,
    pub fault_flag: Vec<bool>,
    pub classification: Vec<Classification>,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-trial seed derivation: a pure function of
/// `(master_seed, trial index, stream id)`, independent of arm order or
/// parallelism. Stream 1 feeds the watermark noise, stream 2 the parasitic
/// noise.
pub fn derive_seed(master_seed: u64, trial: u64, stream: u64) -> u64 {
    let mut state = master_seed;
    let a = splitmix64(&mut state);
    let mut state = a ^ trial;
    let b = splitmix64(&mut state);
    let mut state = b ^ stream;
    splitmix64(&mut state)
}

/// Run `trials` independent end-to-end simulations per arm and aggregate the
/// detector outcomes. All arms within a trial observe the same genuine
/// sensor stream, so arms differ only in the splice they apply.
pub fn run_monte_carlo(
    cfg: &ScenarioConfig,
    trials: usize,
    arms: &[ArmSpec],
) -> Result<(ExperimentSummary, Vec<ArmSamples>)> {
    if trials == 0 {
        return Err(Error::parameter("trials must be >= 1".to_string()));
    }
    if arms.is_empty() {
        return Err(Error::parameter("at least one arm is required".to_string()));
    }
    let start = Instant::now();
    let need_components = arms.iter().any(|a| a.needs_components());
    let det_cfg = cfg.detector_config();

    let mut samples: Vec<ArmSamples> = arms
        .iter()
        .map(|a| ArmSamples {
            arm: a.label(),
            d_w: Vec::with_capacity(trials),
            variance_ratio: Vec::with_capacity(trials),
            fault_flag: Vec::with_capacity(trials),
            classification: Vec::with_capacity(trials),
        })
        .collect();

    for trial in 0..trials as u64 {
        let mut trial_cfg = cfg.clone();
        trial_cfg.nw_seed = derive_seed(cfg.master_seed, trial, 1);
        trial_cfg.np_seed = derive_seed(cfg.master_seed, trial, 2);
        trial_cfg.attack.enabled = false;
        let lab = simulate_sensor_stream(&trial_cfg, need_components)?;
        let genuine = sensor_report(&lab.envelope);

        for (arm, out) in arms.iter().zip(&mut samples) {
            let wire = match arm {
                ArmSpec::None => genuine.clone(),
                ArmSpec::Naive { alpha } => {
                    let rate = genuine.rate_hz;
                    let mut fake =
                        naive_attack(lab.a0_peak, *alpha, genuine.len() as f64 / rate, rate)?;
                    fake.t0_s = genuine.t0_s;
                    fake
                }
                ArmSpec::Proportional { scale } => {
                    let extracted = extract_noise(&genuine, lab.a0_peak)?;
                    synthesize_fake(
                        &extracted,
                        &AttackParams::proportional(*scale, *scale),
                        lab.a0_peak,
                    )?
                }
                ArmSpec::Split { alpha, beta, gamma } => {
                    let (nwd, npd) = lab.components_v.as_ref().expect("components requested");
                    crate::attack::synthesize_fake_split(
                        nwd,
                        npd,
                        &AttackParams::split(*alpha, *beta, *gamma),
                        lab.a0_peak,
                    )?
                }
            };
            let v = crosscorr_detect(&wire, &lab.reference, &det_cfg, lab.a0_peak)?;
            out.d_w.push(v.d_w);
            out.variance_ratio.push(v.variance_ratio);
            out.fault_flag.push(v.fault_flag);
            out.classification.push(classify(&v));
        }
    }

    let arms_summary: Vec<ArmSummary> = samples
        .iter()
        .map(|s| summarize_arm(s, &det_cfg.variance_band))
        .collect();
    let false_alarm_rate = arms
        .iter()
        .zip(&arms_summary)
        .find(|(a, _)| matches!(a, ArmSpec::None))
        .map(|(_, s)| s.detection_rate)
        .unwrap_or(0.0);

    Ok((
        ExperimentSummary {
            trials,
            t0_s: det_cfg.t0_s,
            threshold_used: det_cfg.threshold,
            false_alarm_rate,
            arms: arms_summary,
            runtime_s: start.elapsed().as_secs_f64(),
        },
        samples,
    ))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

fn summarize_arm(s: &ArmSamples, variance_band: &(f64, f64)) -> ArmSummary {
    let n = s.d_w.len();
    let mean = s.d_w.iter().sum::<f64>() / n as f64;
    let var = s.d_w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let mut sorted = s.d_w.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let frac = |count: usize| count as f64 / n as f64;
    ArmSummary {
        arm: s.arm.clone(),
        trials: n,
        d_w_mean: mean,
        d_w_std: var.sqrt(),
        d_w_min: sorted[0],
        d_w_q05: quantile(&sorted, 0.05),
        d_w_median: quantile(&sorted, 0.5),
        d_w_q95: quantile(&sorted, 0.95),
        d_w_max: sorted[n - 1],
        detection_rate: frac(
            s.classification
                .iter()
                .filter(|c| **c == Classification::Attack)
                .count(),
        ),
        variance_flag_rate: frac(
            s.variance_ratio
                .iter()
                .filter(|r| **r < variance_band.0 || **r > variance_band.1)
                .count(),
        ),
        fault_flag_rate: frac(s.fault_flag.iter().filter(|f| **f).count()),
        n_no_attack: s
            .classification
            .iter()
            .filter(|c| **c == Classification::NoAttack)
            .count(),
        n_attack: s
            .classification
            .iter()
            .filter(|c| **c == Classification::Attack)
            .count(),
        n_fault_suspected: s
            .classification
            .iter()
            .filter(|c| **c == Classification::FaultSuspected)
            .count(),
    }
}

/// Threshold calibration result.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct Calibration {
    pub threshold: f64,
    /// False-alarm rate the threshold achieves on the no-attack samples.
    pub achieved_far: f64,
    /// Fraction of attack samples the threshold misses.
    pub miss_rate: f64,
    /// True when the distributions overlap so much that no useful threshold
    /// exists; `threshold` is then best-effort.
    pub warning: bool,
}

/// Pick a detection threshold from empirical D_w samples.
///
/// Among candidate cuts whose false-alarm rate stays at or below
/// `target_far`, the calibrator minimizes the miss rate on the attack
/// samples and, among ties, maximizes the margin to the nearest sample, so
/// cleanly separated distributions get a threshold in the middle of the gap.
pub fn calibrate_threshold(
    no_attack_dw: &[f64],
    attack_dw: &[f64],
    target_far: f64,
) -> Result<Calibration> {
    if no_attack_dw.is_empty() || attack_dw.is_empty() {
        return Err(Error::parameter(
            "calibration needs non-empty sample sets".to_string(),
        ));
    }
    if !(target_far > 0.0 && target_far < 1.0) {
        return Err(Error::parameter(format!(
            "target_far must be in (0, 1), got {target_far}"
        )));
    }

    let mut pooled: Vec<f64> = no_attack_dw.iter().chain(attack_dw).copied().collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pooled.dedup();

    // Candidate cuts: midpoints of adjacent distinct values plus one beyond
    // each end.
    let span = (pooled[pooled.len() - 1] - pooled[0]).max(1e-12);
    let mut candidates = Vec::with_capacity(pooled.len() + 1);
    candidates.push(pooled[0] - 0.05 * span);
    for w in pooled.windows(2) {
        candidates.push(0.5 * (w[0] + w[1]));
    }
    candidates.push(pooled[pooled.len() - 1] + 0.05 * span);

    let far_of = |t: f64| {
        no_attack_dw.iter().filter(|&&v| v < t).count() as f64 / no_attack_dw.len() as f64
    };
    let miss_of =
        |t: f64| attack_dw.iter().filter(|&&v| v >= t).count() as f64 / attack_dw.len() as f64;
    let margin_of = |t: f64| {
        pooled
            .iter()
            .map(|v| (v - t).abs())
            .fold(f64::INFINITY, f64::min)
    };

    let mut best: Option<(f64, f64, f64, f64)> = None; // (threshold, far, miss, margin)
    for &t in &candidates {
        let far = far_of(t);
        if far > target_far {
            continue;
        }
        let miss = miss_of(t);
        let margin = margin_of(t);
        let better = match best {
            None => true,
            Some((_, _, bm, bmarg)) => miss < bm || (miss == bm && margin > bmarg),
        };
        if better {
            best = Some((t, far, miss, margin));
        }
    }
    let (threshold, achieved_far, miss_rate, _) =
        best.expect("a cut below all samples is always feasible");
    Ok(Calibration {
        threshold,
        achieved_far,
        miss_rate,
        warning: miss_rate > 0.5,
    })
}
