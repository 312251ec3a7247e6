//! Shared fixtures for the pipeline benchmarks.

use gridmark_core::*;

/// A paper-scale scenario shortened to `duration_s` for benchmarking.
pub fn bench_config(duration_s: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.duration_s = duration_s;
    cfg.detector.t0_s = duration_s;
    cfg
}

/// Watermarked line voltage plus sensor configuration for stage benchmarks.
pub fn bench_voltage(duration_s: f64) -> (ScenarioConfig, SampledSignal) {
    let cfg = bench_config(duration_s);
    let g = cfg.grid_params().unwrap();
    let nw = gen_bandlimited_gaussian(&cfg.nw_spec().unwrap(), duration_s, cfg.sample_rate_hz)
        .unwrap();
    let np = gen_bandlimited_gaussian(&cfg.np_spec().unwrap(), duration_s, cfg.sample_rate_hz)
        .unwrap();
    let v = apply_watermark_modulation(&g, &nw, &np, duration_s, cfg.sample_rate_hz).unwrap();
    (cfg, v)
}
