//! Minimal SVG line and fan charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Line {
    pub label: String,
    pub y: Vec<f64>,
    pub dashed: bool,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(n: usize, values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        let span = hi - lo;
        let pad = if span > 0.0 { 0.08 * span } else { 0.5 * lo.abs().max(1e-3) };
        Self { x0: 0.0, x1: (n.max(2) - 1) as f64, y0: lo - pad, y1: hi + pad }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn header(s: &mut String, title: &str, f: &Frame, xlabel: &str) {
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        "<path d=\"M{PAD} {PAD} V{:.1} H{:.1}\" fill=\"none\" stroke=\"black\"/>",
        H - PAD,
        W - PAD
    );
    for k in 0..=4 {
        let v = f.y0 + (f.y1 - f.y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            PAD - 4.0,
            f.py(v) + 4.0,
            tick(v)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
        W / 2.0,
        H - 12.0,
        escape(xlabel)
    );
}

fn tick(v: f64) -> String {
    if v.abs() >= 1e-3 || v == 0.0 {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn polyline(f: &Frame, xs: &[f64], ys: &[f64]) -> String {
    xs.iter()
        .zip(ys)
        .filter(|(_, y)| y.is_finite())
        .map(|(&x, &y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lines over the integer grid 0..n, e.g. lag-weight shapes.
pub fn line_chart(title: &str, xlabel: &str, lines: &[Line]) -> String {
    let n = lines.iter().map(|l| l.y.len()).max().unwrap_or(0);
    let f = Frame::new(n, lines.iter().flat_map(|l| l.y.iter().copied()));
    let mut s = String::new();
    header(&mut s, title, &f, xlabel);
    for (i, l) in lines.iter().enumerate() {
        let xs: Vec<f64> = (0..l.y.len()).map(|x| x as f64).collect();
        let dash = if l.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        let c = COLORS[i % COLORS.len()];
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{c}\" stroke-width=\"2\"{dash}/>",
            polyline(&f, &xs, &l.y)
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{c}\">{}</text>",
            W - PAD - 150.0,
            PAD + 14.0 * (i as f64 + 1.0),
            escape(&l.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Fan chart: nested central bands (outer first) around a median, with outcomes.
pub fn fan_chart(title: &str, labels: &[String], bands: &[(Vec<f64>, Vec<f64>)], median: &[f64], outcome: &[f64]) -> String {
    let n = median.len();
    let all = bands.iter().flat_map(|(a, b)| a.iter().chain(b)).chain(median).chain(outcome).copied();
    let f = Frame::new(n, all);
    let mut s = String::new();
    header(&mut s, title, &f, "target period");
    let xs: Vec<f64> = (0..n).map(|x| x as f64).collect();
    for (k, (lo, hi)) in bands.iter().enumerate() {
        let mut pts = polyline(&f, &xs, hi);
        let rev: Vec<f64> = xs.iter().rev().copied().collect();
        let lo_rev: Vec<f64> = lo.iter().rev().copied().collect();
        pts.push(' ');
        pts.push_str(&polyline(&f, &rev, &lo_rev));
        let alpha = 0.15 + 0.15 * k as f64;
        let _ = writeln!(s, "<polygon points=\"{pts}\" fill=\"#1f77b4\" fill-opacity=\"{alpha:.2}\" stroke=\"none\"/>");
    }
    let _ = writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>", polyline(&f, &xs, median));
    for (&x, &y) in xs.iter().zip(outcome) {
        if y.is_finite() {
            let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#d62728\"/>", f.px(x), f.py(y));
        }
    }
    let step = (n / 8).max(1);
    for i in (0..n).step_by(step) {
        if let Some(l) = labels.get(i) {
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">{}</text>",
                f.px(i as f64),
                H - PAD + 14.0,
                escape(l)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_weights_draw_a_horizontal_line() {
        let svg = line_chart("w", "lag", &[Line { label: "flat".into(), y: vec![1.0 / 12.0; 12], dashed: false }]);
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        let ys: Vec<&str> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap()).collect();
        assert_eq!(ys.len(), 12);
        assert!(ys.iter().all(|y| *y == ys[0]));
        // the axis label at the middle of the frame reads 1/12
        assert!(svg.contains(">0.083<"));
    }
}
