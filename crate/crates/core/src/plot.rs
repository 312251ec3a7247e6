//! Minimal SVG line plots for the emitted traces.
//!
//! These are documentation artifacts: tests assert only on CSV numbers, never
//! on plot contents. Rendering is deterministic (fixed-precision coordinate
//! formatting, min-max downsampling) so re-runs produce identical files.

use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 46.0;
/// Above this many points a min-max envelope per pixel column is drawn
/// instead of every sample.
const MAX_POINTS: usize = 4000;

/// One plot: a single series against time (or frequency).
pub struct LinePlot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
}

impl LinePlot<'_> {
    pub fn write_svg(&self, path: &Path) -> Result<()> {
        let svg = self.render()?;
        std::fs::write(path, svg).map_err(|e| Error::io(path.display().to_string(), e))
    }

    fn render(&self) -> Result<String> {
        if self.xs.len() != self.ys.len() || self.xs.is_empty() {
            return Err(Error::parameter(format!(
                "plot `{}` needs equal-length nonempty series",
                self.title
            )));
        }
        let (x_min, x_max) = min_max(self.xs);
        let (mut y_min, mut y_max) = min_max(self.ys);
        if y_min == y_max {
            y_min -= 1.0;
            y_max += 1.0;
        }
        // A little vertical headroom.
        let pad = 0.05 * (y_max - y_min);
        let (y_min, y_max) = (y_min - pad, y_max + pad);

        let plot_w = WIDTH - MARGIN_L - MARGIN_R;
        let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
        let sx = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min).max(f64::MIN_POSITIVE) * plot_w;
        let sy = |y: f64| MARGIN_T + (y_max - y) / (y_max - y_min) * plot_h;

        let mut out = String::with_capacity(32 * 1024);
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"20\" font-family=\"sans-serif\" font-size=\"15\" \
             text-anchor=\"middle\">{}</text>\n",
            MARGIN_L + plot_w / 2.0,
            escape(self.title)
        ));

        // Axes with ticks.
        out.push_str(&format!(
            "<rect x=\"{MARGIN_L:.1}\" y=\"{MARGIN_T:.1}\" width=\"{plot_w:.1}\" \
             height=\"{plot_h:.1}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n"
        ));
        for (frac, value) in ticks(x_min, x_max) {
            let px = MARGIN_L + frac * plot_w;
            out.push_str(&format!(
                "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
                MARGIN_T + plot_h,
                MARGIN_T + plot_h + 5.0
            ));
            out.push_str(&format!(
                "<text x=\"{px:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
                 text-anchor=\"middle\">{}</text>\n",
                MARGIN_T + plot_h + 18.0,
                tick_label(value)
            ));
        }
        for (frac, value) in ticks(y_min, y_max) {
            let py = MARGIN_T + (1.0 - frac) * plot_h;
            out.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{MARGIN_L:.1}\" y2=\"{py:.1}\" stroke=\"black\"/>\n",
                MARGIN_L - 5.0
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
                 text-anchor=\"end\">{}</text>\n",
                MARGIN_L - 8.0,
                py + 4.0,
                tick_label(value)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{}</text>\n",
            MARGIN_L + plot_w / 2.0,
            HEIGHT - 8.0,
            escape(self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"14\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>\n",
            MARGIN_T + plot_h / 2.0,
            MARGIN_T + plot_h / 2.0,
            escape(self.y_label)
        ));

        // Polyline, downsampled by per-column min-max when dense.
        let pts = downsample(self.xs, self.ys);
        out.push_str("<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"");
        for (x, y) in pts {
            out.push_str(&format!("{:.2},{:.2} ", sx(x), sy(y)));
        }
        out.push_str("\"/>\n</svg>\n");
        Ok(out)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn min_max(v: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in v {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    (lo, hi)
}

/// Five round-ish ticks across `[lo, hi]` as (fraction, value) pairs.
fn ticks(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let span = hi - lo;
    (0..=4)
        .map(|i| {
            let frac = i as f64 / 4.0;
            (frac, lo + frac * span)
        })
        .collect()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn downsample(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    let n = xs.len();
    if n <= MAX_POINTS {
        return xs.iter().copied().zip(ys.iter().copied()).collect();
    }
    // Per bucket keep the min and max sample in encounter order, preserving
    // extremes that a plain stride would drop.
    let buckets = MAX_POINTS / 2;
    let mut pts = Vec::with_capacity(buckets * 2);
    for b in 0..buckets {
        let start = b * n / buckets;
        let end = ((b + 1) * n / buckets).max(start + 1);
        let mut i_min = start;
        let mut i_max = start;
        for i in start..end {
            if ys[i] < ys[i_min] {
                i_min = i;
            }
            if ys[i] > ys[i_max] {
                i_max = i;
            }
        }
        let (first, second) = if i_min <= i_max {
            (i_min, i_max)
        } else {
            (i_max, i_min)
        };
        pts.push((xs[first], ys[first]));
        if second != first {
            pts.push((xs[second], ys[second]));
        }
    }
    pts
}
