use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Horizontal dashed reference line.
pub struct RefLine<'a> {
    pub name: &'a str,
    pub y: f64,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        let (x0, x1) = span(&mut xs.clone());
        let (mut y0, mut y1) = span(&mut ys.clone());
        if !(x0.is_finite() && x1.is_finite()) {
            return Self { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
        }
        let margin = 0.05 * (y1 - y0).max(y1.abs().max(1e-300) * 1e-3);
        y0 -= margin;
        y1 += margin;
        Self { x0, x1: if x1 > x0 { x1 } else { x0 + 1.0 }, y0, y1 }
    }

    fn x(&self, v: f64) -> f64 {
        PAD + (v - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn y(&self, v: f64) -> f64 {
        H - PAD - (v - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn open(title: &str, f: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for (v, anchor_y) in [(f.y0, H - PAD), (f.y1, PAD + 8.0)] {
        let _ = writeln!(s, r#"<text x="{}" y="{anchor_y}" text-anchor="end">{}</text>"#, PAD - 4.0, short(v));
    }
    for (v, anchor) in [(f.x0, "start"), (f.x1, "end")] {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="{anchor}">{}</text>"#, f.x(v), H - PAD + 16.0, short(v));
    }
    s
}

fn short(v: f64) -> String {
    if v != 0.0 && !(1e-2..1e5).contains(&v.abs()) {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn legend(s: &mut String, entries: &[(&str, &str, bool)]) {
    for (k, (name, color, dashed)) in entries.iter().enumerate() {
        let y = PAD + 14.0 + 14.0 * k as f64;
        let dash = if *dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            W - PAD - 110.0,
            W - PAD - 90.0,
            W - PAD - 85.0,
            y + 4.0,
            escape(name)
        );
    }
}

fn ref_lines(s: &mut String, f: &Frame, refs: &[RefLine], entries: &mut Vec<(String, bool)>) {
    for r in refs {
        let y = f.y(r.y);
        let _ = writeln!(
            s,
            r##"<line x1="{PAD}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#555" stroke-dasharray="5,3"/>"##,
            W - PAD
        );
        entries.push((r.name.to_string(), true));
    }
}

/// Line chart; long series are thinned to at most 2000 points.
pub fn line_plot(title: &str, series: &[Series], refs: &[RefLine]) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).chain(refs.iter().map(|r| r.y));
    let f = Frame::fit(xs, ys);
    let mut s = open(title, &f);
    for (k, ser) in series.iter().enumerate() {
        let stride = ser.points.len().div_ceil(2000).max(1);
        let pts: Vec<String> = ser
            .points
            .iter()
            .step_by(stride)
            .map(|&(x, y)| format!("{:.2},{:.2}", f.x(x), f.y(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
            COLORS[k % COLORS.len()],
            pts.join(" ")
        );
    }
    let mut extra = Vec::new();
    ref_lines(&mut s, &f, refs, &mut extra);
    let mut entries: Vec<(&str, &str, bool)> =
        series.iter().enumerate().map(|(k, ser)| (ser.name, COLORS[k % COLORS.len()], false)).collect();
    entries.extend(extra.iter().map(|(n, d)| (n.as_str(), "#555", *d)));
    legend(&mut s, &entries);
    s.push_str("</svg>\n");
    s
}

/// Bin counts of `values` over their range. Returns `(left_edge, width, count)`.
pub fn bin_counts(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || bins == 0 {
        return Vec::new();
    }
    let width = if hi > lo { (hi - lo) / bins as f64 } else { lo.abs().max(1e-300) * 1e-6 };
    let mut counts = vec![0; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts.into_iter().enumerate().map(|(b, c)| (lo + width * b as f64, width, c)).collect()
}

/// Center of the fullest bin.
pub fn histogram_mode(values: &[f64], bins: usize) -> Option<f64> {
    bin_counts(values, bins)
        .into_iter()
        .fold(None, |best: Option<(f64, f64, usize)>, b| match best {
            Some(x) if x.2 >= b.2 => Some(x),
            _ => Some(b),
        })
        .map(|(left, width, _)| left + 0.5 * width)
}

pub fn histogram(title: &str, values: &[f64], bins: usize, refs: &[RefLine]) -> String {
    let counts = bin_counts(values, bins);
    let max = counts.iter().map(|c| c.2).max().unwrap_or(1).max(1) as f64;
    // x axis is the value axis here; reference lines are vertical
    let xs = counts.iter().flat_map(|c| [c.0, c.0 + c.1]).chain(refs.iter().map(|r| r.y));
    let f = Frame::fit(xs, [0.0, max].into_iter());
    let mut s = open(title, &f);
    for &(left, width, c) in &counts {
        let (x0, x1) = (f.x(left), f.x(left + width));
        let (top, base) = (f.y(c as f64), f.y(0.0));
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}" fill-opacity="0.7"/>"#,
            (x1 - x0).max(0.5),
            (base - top).max(0.0),
            COLORS[0]
        );
    }
    for r in refs {
        let x = f.x(r.y);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{PAD}" x2="{x:.2}" y2="{}" stroke="#555" stroke-dasharray="5,3"/>"##,
            H - PAD
        );
    }
    let entries: Vec<(&str, &str, bool)> = refs.iter().map(|r| (r.name, "#555", true)).collect();
    legend(&mut s, &entries);
    s.push_str("</svg>\n");
    s
}
