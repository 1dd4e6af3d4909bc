//! Minimal SVG line charts.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::io::{CurvePoint, TransferPoint};

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let range = |v: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let mut xs = xs;
        let mut ys = ys;
        let (ylo, yhi) = range(&mut ys);
        let pad = 0.05 * (yhi - ylo);
        Self { x: range(&mut xs), y: (ylo - pad, yhi + pad) }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }

    fn axes(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let _ = write!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>
<line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>
<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>
<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>
<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>
"#,
            (LEFT + W - RIGHT) / 2.0,
            escape(title),
            H - BOTTOM,
            W - RIGHT,
            H - BOTTOM,
            H - BOTTOM,
            (LEFT + W - RIGHT) / 2.0,
            H - 12.0,
            escape(xlabel),
            (TOP + H - BOTTOM) / 2.0,
            (TOP + H - BOTTOM) / 2.0,
            escape(ylabel),
        );
        for i in 0..=4 {
            let fx = self.x.0 + (self.x.1 - self.x.0) * i as f64 / 4.0;
            let fy = self.y.0 + (self.y.1 - self.y.0) * i as f64 / 4.0;
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, self.px(fx), H - BOTTOM + 16.0, tick(fx));
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, LEFT - 6.0, self.py(fy) + 4.0, tick(fy));
        }
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn polyline(f: &Frame, pts: &[(f64, f64)], color: &str, dash: bool) -> String {
    let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", f.px(x), f.py(y))).collect();
    let dash = if dash { r#" stroke-dasharray="6 4""# } else { "" };
    format!(r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#, coords.join(" ")) + "\n"
}

fn legend(out: &mut String, i: usize, label: &str, color: &str, dash: bool) {
    let y = TOP + 10.0 + 18.0 * i as f64;
    let x = W - RIGHT + 12.0;
    let dash = if dash { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = writeln!(out, r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"{dash}/>"#, x + 24.0);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, x + 30.0, y + 4.0, escape(label));
}

/// Mean return per variant against episodes seen, with 95% bands.
pub fn learning_curve(title: &str, points: &[CurvePoint]) -> String {
    let mut by_variant: BTreeMap<&str, Vec<&CurvePoint>> = BTreeMap::new();
    for p in points {
        by_variant.entry(p.variant.as_str()).or_default().push(p);
    }
    let frame = Frame::new(
        points.iter().map(|p| p.episodes_seen as f64),
        points.iter().flat_map(|p| [p.mean_return - p.ci95, p.mean_return + p.ci95]),
    );
    let mut out = String::new();
    frame.axes(&mut out, title, "target episodes", "discounted return");
    for (i, (variant, pts)) in by_variant.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let upper: Vec<String> = pts.iter().map(|p| format!("{:.1},{:.1}", frame.px(p.episodes_seen as f64), frame.py(p.mean_return + p.ci95))).collect();
        let lower: Vec<String> =
            pts.iter().rev().map(|p| format!("{:.1},{:.1}", frame.px(p.episodes_seen as f64), frame.py(p.mean_return - p.ci95))).collect();
        let _ = writeln!(out, r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#, upper.join(" "), lower.join(" "));
        let line: Vec<(f64, f64)> = pts.iter().map(|p| (p.episodes_seen as f64, p.mean_return)).collect();
        out.push_str(&polyline(&frame, &line, color, false));
        legend(&mut out, i, variant, color, false);
    }
    out.push_str("</svg>\n");
    out
}

/// Reward (solid) and transition (dashed) weight share per source.
pub fn transfer_chart(title: &str, points: &[TransferPoint]) -> String {
    let mut by_source: BTreeMap<u32, Vec<&TransferPoint>> = BTreeMap::new();
    for p in points {
        by_source.entry(p.source_id).or_default().push(p);
    }
    let frame = Frame { x: Frame::new(points.iter().map(|p| p.batch as f64), std::iter::empty()).x, y: (0.0, 1.0) };
    let mut out = String::new();
    frame.axes(&mut out, title, "batch", "share of source weight mass");
    let mut row = 0;
    for (i, (id, pts)) in by_source.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let r: Vec<(f64, f64)> = pts.iter().map(|p| (p.batch as f64, p.reward_mass)).collect();
        let t: Vec<(f64, f64)> = pts.iter().map(|p| (p.batch as f64, p.transition_mass)).collect();
        out.push_str(&polyline(&frame, &r, color, false));
        out.push_str(&polyline(&frame, &t, color, true));
        legend(&mut out, row, &format!("source {id} reward"), color, false);
        legend(&mut out, row + 1, &format!("source {id} transition"), color, true);
        row += 2;
    }
    out.push_str("</svg>\n");
    out
}
