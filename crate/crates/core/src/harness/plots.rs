use std::fmt::Write as _;

use crate::metrics::MetricsRecord;

pub const MEAN_ERROR_SVG: &str = "mean_error.svg";
pub const DRIFT_SVG: &str = "drift.svg";

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Round tick step of about `range / target`: 1, 2 or 5 times a power of ten.
pub fn nice_step(range: f64, target: usize) -> f64 {
    if !(range > 0.0) || !range.is_finite() {
        return 1.0;
    }
    let raw = range / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let m = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

/// Tick positions covering `[lo, hi]` with a round step.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo, lo + 1.0) };
    let step = nice_step(hi - lo, target);
    let first = (lo / step).floor() as i64;
    let last = (hi / step - 1e-9).ceil() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') { "0".into() } else { s }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn join<T: std::fmt::Display>(values: impl IntoIterator<Item = T>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

/// Line chart with axes, ticks, legend and a metadata block.
fn line_chart(title: &str, y_label: &str, series: &[Series], metadata: &str) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).filter(|v| v.is_finite());
    let (x_lo, x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let y_hi = ys.fold(0.0f64, f64::max);
    let x_ticks = nice_ticks(x_lo.min(0.0).max(if x_lo.is_finite() { x_lo } else { 0.0 }), x_hi.max(x_lo + 1.0), 8);
    let y_ticks = nice_ticks(0.0, if y_hi > 0.0 { y_hi } else { 1.0 }, 5);
    let (x0, x1) = (x_ticks[0], *x_ticks.last().unwrap());
    let (y0, y1) = (y_ticks[0], *y_ticks.last().unwrap());
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;
    let x_step = if x_ticks.len() > 1 { x_ticks[1] - x_ticks[0] } else { 1.0 };
    let y_step = if y_ticks.len() > 1 { y_ticks[1] - y_ticks[0] } else { 1.0 };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#);
    s.push_str(metadata);
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, escape(title));
    let _ = writeln!(s, r##"<g class="axes" stroke="#333" fill="none">"##);
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{}" x2="{}" y2="{}"/>"#, TOP + ph, LEFT + pw, TOP + ph);
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}"/>"#, TOP + ph);
    s.push_str("</g>\n<g class=\"ticks\">\n");
    for &t in &x_ticks {
        let x = px(t);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#333"/>"##, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(s, r#"<text class="xtick" x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, tick_label(t, x_step));
    }
    for &t in &y_ticks {
        let y = py(t);
        let _ = writeln!(s, r##"<line x1="{}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT, LEFT + pw);
        let _ = writeln!(s, r#"<text class="ytick" x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, tick_label(t, y_step));
    }
    s.push_str("</g>\n");
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">slice z</text>"#, LEFT + pw / 2.0, HEIGHT - 12.0);
    let _ = writeln!(s, r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#, TOP + ph / 2.0, TOP + ph / 2.0, escape(y_label));
    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = ser.points.iter().filter(|p| p.1.is_finite()).map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-method="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            escape(&ser.label),
            pts.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(s, r#"<g class="legend-entry"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#, lx + 20.0, lx + 26.0, ly + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

/// Per-slice mean error, one line per method. The metadata block lists the
/// plotted `mean_px` values exactly as written to `metrics.csv`.
pub fn mean_error_svg(records: &[MetricsRecord]) -> String {
    let mut meta = String::from("<metadata id=\"serireg-data\">\n");
    let series: Vec<Series> = records
        .iter()
        .map(|r| {
            let _ = writeln!(
                meta,
                r#"<series method="{}" column="mean_px" z="{}" values="{}"/>"#,
                escape(&r.method),
                join(r.slices.iter().map(|s| s.z)),
                join(r.slices.iter().map(|s| s.error.mean))
            );
            Series { label: r.method.clone(), points: r.slices.iter().map(|s| (s.z as f64, s.error.mean)).collect() }
        })
        .collect();
    meta.push_str("</metadata>\n");
    line_chart("Mean geometric error per slice", "mean error (px)", &series, &meta)
}

/// Magnitude of the cumulative mean residual, one line per method. The
/// metadata block lists the per-slice `m_x_px`/`m_y_px` it is built from.
pub fn drift_svg(records: &[MetricsRecord]) -> String {
    let mut meta = String::from("<metadata id=\"serireg-data\">\n");
    let series: Vec<Series> = records
        .iter()
        .map(|r| {
            let _ = writeln!(
                meta,
                r#"<series method="{}" column="m_x_px" z="{}" values="{}"/>"#,
                escape(&r.method),
                join(r.slices.iter().map(|s| s.z)),
                join(r.slices.iter().map(|s| s.mean_residual[0]))
            );
            let _ = writeln!(
                meta,
                r#"<series method="{}" column="m_y_px" z="{}" values="{}"/>"#,
                escape(&r.method),
                join(r.slices.iter().map(|s| s.z)),
                join(r.slices.iter().map(|s| s.mean_residual[1]))
            );
            let points = r.slices.iter().zip(&r.drift.cumulative).map(|(s, c)| (s.z as f64, c[0].hypot(c[1]))).collect();
            Series { label: r.method.clone(), points }
        })
        .collect();
    meta.push_str("</metadata>\n");
    line_chart("Cumulative drift", "|cumulative mean residual| (px)", &series, &meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(nice_ticks(0.0, 10.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(nice_step(0.37, 5), 0.1);
        let t = nice_ticks(0.0, 0.83, 5);
        assert_eq!(t.len(), 6);
        assert!((t[5] - 1.0).abs() < 1e-12);
        assert_eq!(tick_label(0.30000000000000004, 0.1), "0.3");
        assert_eq!(tick_label(4.0, 2.0), "4");
    }
}
