//! Minimal SVG histograms, one panel per coefficient.

use std::fmt::Write;

use zonerisk_core::jackknife::histogram;

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 200.0;
const MARGIN: f64 = 30.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Panels side by side; the full-data estimate is drawn as a red line.
pub fn histograms(region: &str, names: &[String], samples: &[Vec<f64>], full: &[f64], bins: usize) -> String {
    let width = PANEL_W * names.len().max(1) as f64;
    let height = PANEL_H + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="6" y="16" font-size="13">{}</text>"#, escape(region));
    for (p, (name, xs)) in names.iter().zip(samples).enumerate() {
        let x0 = p as f64 * PANEL_W + MARGIN;
        let y0 = MARGIN;
        let w = PANEL_W - 2.0 * MARGIN;
        let h = PANEL_H - MARGIN;
        let hist = histogram(xs, bins);
        let peak = hist.iter().map(|b| b.2).max().unwrap_or(1).max(1) as f64;
        let (lo, hi) = match (hist.first(), hist.last()) {
            (Some(a), Some(b)) => (a.0.min(full[p]), b.1.max(full[p])),
            _ => (full[p] - 1.0, full[p] + 1.0),
        };
        let span = if hi > lo { hi - lo } else { 1.0 };
        let sx = |v: f64| x0 + (v - lo) / span * w;
        for &(a, b, c) in &hist {
            let bh = c as f64 / peak * h;
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#6a8caf"/>"##,
                sx(a),
                y0 + h - bh,
                (sx(b) - sx(a)).max(1.0),
                bh
            );
        }
        let fx = sx(full[p]);
        let _ = writeln!(
            s,
            r##"<line x1="{fx:.2}" y1="{y0:.2}" x2="{fx:.2}" y2="{:.2}" stroke="#c0392b" stroke-width="1.5"/>"##,
            y0 + h
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x0 + w / 2.0,
            y0 + h + 16.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}
