//! Minimal static SVG charts: box plots, bar charts with a dashed mean
//! line, and labelled scatter plots.

use std::fmt::Write;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 110.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

struct Frame {
    y_min: f64,
    y_max: f64,
    out: String,
}

impl Frame {
    fn new(title: &str, y_label: &str, mut y_min: f64, mut y_max: f64) -> Self {
        if !(y_min.is_finite() && y_max.is_finite()) {
            y_min = 0.0;
            y_max = 1.0;
        }
        if y_max <= y_min {
            y_min -= 0.5;
            y_max += 0.5;
        }
        let pad = 0.05 * (y_max - y_min);
        let (y_min, y_max) = (y_min - pad, y_max + pad);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
        let _ = writeln!(
            out,
            r#"<text transform="translate(16,{}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
            escape(y_label)
        );
        let mut f = Self { y_min, y_max, out };
        f.axes();
        f
    }

    fn y(&self, v: f64) -> f64 {
        let h = HEIGHT - TOP - BOTTOM;
        TOP + h * (1.0 - (v - self.y_min) / (self.y_max - self.y_min))
    }

    fn axes(&mut self) {
        let bottom = HEIGHT - BOTTOM;
        let _ = writeln!(self.out, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{bottom}" stroke="black"/>"#);
        let _ = writeln!(self.out, r#"<line x1="{LEFT}" y1="{bottom}" x2="{}" y2="{bottom}" stroke="black"/>"#, WIDTH - RIGHT);
        for i in 0..=4 {
            let v = self.y_min + (self.y_max - self.y_min) * i as f64 / 4.0;
            let y = self.y(v);
            let _ = writeln!(self.out, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 4.0);
            let _ = writeln!(self.out, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, LEFT - 6.0, y + 4.0);
        }
    }

    fn slot(&self, i: usize, n: usize) -> (f64, f64) {
        let w = (WIDTH - LEFT - RIGHT) / n.max(1) as f64;
        (LEFT + w * (i as f64 + 0.5), w)
    }

    fn x_label(&mut self, x: f64, label: &str) {
        let y = HEIGHT - BOTTOM + 12.0;
        let _ = writeln!(
            self.out,
            r#"<text transform="translate({x:.2},{y}) rotate(45)" text-anchor="start">{}</text>"#,
            escape(label)
        );
    }

    fn hline(&mut self, v: f64, dashed: bool, color: &str) {
        let y = self.y(v);
        let dash = if dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            self.out,
            r#"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="{color}"{dash}/>"#,
            WIDTH - RIGHT
        );
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

/// One box (quartiles, 1.5 IQR whiskers) per group.
pub fn boxplot(title: &str, y_label: &str, groups: &[(String, Vec<f64>)], reference: Option<f64>) -> String {
    let all = groups.iter().flat_map(|g| g.1.iter().copied()).filter(|v| v.is_finite());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = match reference {
        Some(r) => (lo.min(r), hi.max(r)),
        None => (lo, hi),
    };
    let mut f = Frame::new(title, y_label, lo, hi);
    if let Some(r) = reference {
        f.hline(r, true, "gray");
    }
    for (i, (name, values)) in groups.iter().enumerate() {
        let (cx, w) = f.slot(i, groups.len());
        f.x_label(cx, name);
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            continue;
        }
        v.sort_by(f64::total_cmp);
        let (q1, med, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
        let iqr = q3 - q1;
        let lo_w = v.iter().copied().find(|&x| x >= q1 - 1.5 * iqr).unwrap_or(q1);
        let hi_w = v.iter().rev().copied().find(|&x| x <= q3 + 1.5 * iqr).unwrap_or(q3);
        let bw = (w * 0.6).min(40.0);
        let (x0, x1) = (cx - bw / 2.0, cx + bw / 2.0);
        let _ = writeln!(f.out, r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#, f.y(lo_w), f.y(hi_w));
        let _ = writeln!(
            f.out,
            r##"<rect x="{x0:.2}" y="{:.2}" width="{bw:.2}" height="{:.2}" fill="#9ecae1" stroke="black"/>"##,
            f.y(q3),
            (f.y(q1) - f.y(q3)).max(0.5)
        );
        let _ = writeln!(f.out, r#"<line x1="{x0:.2}" y1="{:.2}" x2="{x1:.2}" y2="{:.2}" stroke="black" stroke-width="2"/>"#, f.y(med), f.y(med));
        for &o in v.iter().filter(|&&x| x < lo_w || x > hi_w) {
            let _ = writeln!(f.out, r#"<circle cx="{cx:.2}" cy="{:.2}" r="1.5" fill="none" stroke="black"/>"#, f.y(o));
        }
    }
    f.finish()
}

/// Bars with an optional dashed line at `mean`.
pub fn bars(title: &str, y_label: &str, values: &[(String, f64)], mean: Option<f64>) -> String {
    let hi = values.iter().map(|v| v.1).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let lo = values.iter().map(|v| v.1).filter(|v| v.is_finite()).fold(0.0, f64::min);
    let mut f = Frame::new(title, y_label, lo, hi.max(mean.unwrap_or(0.0)));
    let zero = f.y(0.0);
    for (i, (name, v)) in values.iter().enumerate() {
        let (cx, w) = f.slot(i, values.len());
        f.x_label(cx, name);
        if !v.is_finite() {
            continue;
        }
        let bw = (w * 0.7).min(50.0);
        let top = f.y(*v).min(zero);
        let height = (f.y(*v) - zero).abs();
        let _ = writeln!(
            f.out,
            r##"<rect x="{:.2}" y="{top:.2}" width="{bw:.2}" height="{height:.2}" fill="#6baed6" stroke="black"/>"##,
            cx - bw / 2.0
        );
    }
    if let Some(m) = mean {
        f.hline(m, true, "red");
    }
    f.finish()
}

/// Points labelled by name; the x axis is scaled to the data.
pub fn scatter(title: &str, x_label: &str, y_label: &str, points: &[(String, f64, f64)]) -> String {
    let finite: Vec<&(String, f64, f64)> = points.iter().filter(|p| p.1.is_finite() && p.2.is_finite()).collect();
    let (ylo, yhi) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.2), b.max(p.2)));
    let (xlo, xhi) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (xlo, xhi) = if xhi > xlo { (xlo, xhi) } else if xlo.is_finite() { (xlo - 0.5, xlo + 0.5) } else { (0.0, 1.0) };
    let mut f = Frame::new(title, y_label, ylo, yhi);
    let span = WIDTH - LEFT - RIGHT - 40.0;
    let x_of = |x: f64| LEFT + 20.0 + span * (x - xlo) / (xhi - xlo);
    for i in 0..=4 {
        let v = xlo + (xhi - xlo) * i as f64 / 4.0;
        let _ = writeln!(f.out, r#"<text x="{:.2}" y="{}" text-anchor="middle">{v:.3}</text>"#, x_of(v), HEIGHT - BOTTOM + 16.0);
    }
    let _ = writeln!(f.out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - BOTTOM + 40.0, escape(x_label));
    for p in finite {
        let (x, y) = (x_of(p.1), f.y(p.2));
        let _ = writeln!(f.out, r##"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="#3182bd"/>"##);
        let _ = writeln!(f.out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 5.0, y - 5.0, escape(&p.0));
    }
    f.finish()
}
