//! Minimal static SVG: polylines and log-log scatter.

use std::fmt::Write;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

struct Frame {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Frame {
    fn fit(points: impl Iterator<Item = [f64; 2]>) -> Option<Self> {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points.filter(|p| p[0].is_finite() && p[1].is_finite()) {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        if !lo[0].is_finite() {
            return None;
        }
        for a in 0..2 {
            if hi[a] - lo[a] < 1e-300 {
                lo[a] -= 0.5;
                hi[a] += 0.5;
            }
        }
        Some(Self { lo, hi })
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        let span = SIZE - 2.0 * MARGIN;
        let x = MARGIN + span * (p[0] - self.lo[0]) / (self.hi[0] - self.lo[0]);
        let y = SIZE - MARGIN - span * (p[1] - self.lo[1]) / (self.hi[1] - self.lo[1]);
        (x, y)
    }
}

fn open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" \
         viewBox=\"0 0 {SIZE} {SIZE}\">\n<title>{}</title>\n\
         <rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{w}\" height=\"{w}\" \
         fill=\"none\" stroke=\"#999\"/>\n",
        escape(title),
        w = SIZE - 2.0 * MARGIN
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Polylines in a common, axis-aligned frame.
pub fn polylines_svg(title: &str, lines: &[Vec<[f64; 2]>]) -> String {
    let mut out = open(title);
    if let Some(frame) = Frame::fit(lines.iter().flatten().copied()) {
        for line in lines.iter().filter(|l| l.len() > 1) {
            let pts: Vec<String> = line
                .iter()
                .map(|p| {
                    let (x, y) = frame.map(*p);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"black\" points=\"{}\"/>",
                pts.join(" ")
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Scatter of named series on log10 axes; nonpositive points are dropped.
pub fn loglog_svg(title: &str, series: &[(&str, &[[f64; 2]])]) -> String {
    const COLORS: [&str; 4] = ["black", "crimson", "steelblue", "darkgreen"];
    let logged: Vec<Vec<[f64; 2]>> = series
        .iter()
        .map(|(_, pts)| {
            pts.iter()
                .filter(|[x, y]| *x > 0.0 && *y > 0.0)
                .map(|[x, y]| [x.log10(), y.log10()])
                .collect()
        })
        .collect();
    let mut out = open(title);
    if let Some(frame) = Frame::fit(logged.iter().flatten().copied()) {
        for (i, ((name, _), pts)) in series.iter().zip(&logged).enumerate() {
            let color = COLORS[i % COLORS.len()];
            writeln!(out, "<g fill=\"{color}\"><title>{}</title>", escape(name)).unwrap();
            for p in pts {
                let (x, y) = frame.map(*p);
                writeln!(out, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"3\"/>").unwrap();
            }
            out.push_str("</g>\n");
        }
    }
    out.push_str("</svg>\n");
    out
}
