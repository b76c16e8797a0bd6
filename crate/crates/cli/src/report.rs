//! Static SVG summary: one box per estimator of the standardized signed
//! differences between estimate and realized test error.

use crate::experiment::ResultRow;
use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 56.0;

/// Five-number summary with whiskers at the extremes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl BoxStats {
    pub fn new(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

/// `(ê − e) / mean(e)` per replication for each estimator, in the given order.
pub fn standardized_differences(
    rows: &[ResultRow],
    estimators: &[&str],
) -> Vec<(String, Vec<f64>)> {
    estimators
        .iter()
        .map(|&name| {
            let own: Vec<&ResultRow> = rows.iter().filter(|r| r.estimator == name).collect();
            let scale =
                own.iter().map(|r| r.true_test_error).sum::<f64>() / own.len().max(1) as f64;
            let diffs = own
                .iter()
                .map(|r| (r.estimate - r.true_test_error) / scale)
                .collect();
            (name.to_string(), diffs)
        })
        .collect()
}

pub fn render(title: &str, groups: &[(String, Vec<f64>)]) -> String {
    let stats: Vec<(&str, BoxStats)> = groups
        .iter()
        .filter_map(|(name, v)| BoxStats::new(v).map(|s| (name.as_str(), s)))
        .collect();
    let (mut lo, mut hi) = stats.iter().fold((0.0f64, 0.0f64), |(lo, hi), (_, s)| {
        (lo.min(s.min), hi.max(s.max))
    });
    if hi - lo < 1e-12 {
        (lo, hi) = (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let y = |v: f64| MARGIN + (hi - v) / (hi - lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        y(0.0),
        WIDTH - MARGIN
    );
    let (tick_values, digits) = ticks(lo, hi);
    for t in tick_values {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{t:.digits$}</text>"#,
            MARGIN - 6.0,
            y(t) + 4.0
        );
    }
    let slot = (WIDTH - 2.0 * MARGIN) / stats.len().max(1) as f64;
    for (k, (name, s)) in stats.iter().enumerate() {
        let cx = MARGIN + slot * (k as f64 + 0.5);
        let half = (slot * 0.25).min(40.0);
        let _ = writeln!(
            svg,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            y(s.max),
            y(s.min)
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="lightsteelblue" stroke="black"/>"#,
            cx - half,
            y(s.q3),
            2.0 * half,
            (y(s.q1) - y(s.q3)).max(0.5)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{2:.2}" x2="{:.2}" y2="{2:.2}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            cx + half,
            y(s.median)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.2}" y="{}" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN + 20.0,
            escape(name)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {0})" text-anchor="middle">(estimate − test error) / mean test error</text>"#,
        HEIGHT / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// About five round tick values spanning `[lo, hi]`, and the decimals to print.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / 5.0;
    let exp = raw.log10().floor();
    let mag = 10f64.powf(exp);
    // Nice step closest to a fifth of the range on a log scale.
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .min_by(|a, b| (a / raw).ln().abs().total_cmp(&(b / raw).ln().abs()))
        .expect("nonempty");
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (
        (first..=last).map(|i| i as f64 * step).collect(),
        (-exp).max(0.0) as usize,
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
