//! Minimal two-panel SVG chart: tracking errors and log NE distance.

use std::fmt::Write;

use nashtrack::ClosedLoopTrajectory;

const WIDTH: f64 = 720.0;
const PANEL_H: f64 = 240.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Panel<'a> {
    top: f64,
    title: &'a str,
    t0: f64,
    t1: f64,
    lo: f64,
    hi: f64,
}

impl Panel<'_> {
    fn x(&self, t: f64) -> f64 {
        MARGIN + (t - self.t0) / (self.t1 - self.t0).max(f64::MIN_POSITIVE) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.hi - self.lo).max(1e-300);
        self.top + PANEL_H - MARGIN / 2.0 - (v - self.lo) / span * (PANEL_H - MARGIN)
    }

    fn frame(&self, out: &mut String) {
        let (x0, x1) = (self.x(self.t0), self.x(self.t1));
        let (y0, y1) = (self.y(self.lo), self.y(self.hi));
        let _ = writeln!(
            out,
            r##"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#999"/>"##,
            x1 - x0,
            y0 - y1
        );
        let _ = writeln!(out, r#"<text x="{x0:.1}" y="{:.1}" font-size="13">{}</text>"#, y1 - 6.0, self.title);
        let _ = writeln!(out, r#"<text x="4" y="{y1:.1}" font-size="11">{:.3e}</text>"#, self.hi);
        let _ = writeln!(out, r#"<text x="4" y="{y0:.1}" font-size="11">{:.3e}</text>"#, self.lo);
        let _ = writeln!(out, r#"<text x="{x1:.1}" y="{:.1}" font-size="11" text-anchor="end">t = {:.3}</text>"#, y0 + 16.0, self.t1);
    }

    fn polyline(&self, out: &mut String, ts: &[f64], vs: &[f64], color: &str) {
        let pts: Vec<String> = ts
            .iter()
            .zip(vs)
            .filter(|(_, v)| v.is_finite())
            .map(|(t, v)| format!("{:.2},{:.2}", self.x(*t), self.y(*v)))
            .collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#, pts.join(" "));
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

pub fn render(traj: &ClosedLoopTrajectory) -> String {
    let n = traj.n();
    let ts = &traj.times;
    let (t0, t1) = (ts.first().copied().unwrap_or(0.0), ts.last().copied().unwrap_or(1.0));
    let errors: Vec<Vec<f64>> = (0..ts.len()).map(|k| traj.errors(k)).collect();
    let (lo, hi) = range(errors.iter().flatten().copied());
    let top = Panel {
        top: 0.0,
        title: "tracking errors e_i(t)",
        t0,
        t1,
        lo,
        hi,
    };
    let log_dist: Vec<f64> = traj.ne_dist.iter().map(|d| d.max(1e-300).log10()).collect();
    let (llo, lhi) = range(log_dist.iter().copied());
    let bottom = Panel {
        top: PANEL_H,
        title: "log10 distance to Nash equilibrium",
        t0,
        t1,
        lo: llo,
        hi: lhi,
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{}" font-family="sans-serif">"#,
        2.0 * PANEL_H
    );
    top.frame(&mut out);
    for i in 0..n {
        let series: Vec<f64> = errors.iter().map(|e| e[i]).collect();
        top.polyline(&mut out, ts, &series, COLORS[i % COLORS.len()]);
    }
    bottom.frame(&mut out);
    bottom.polyline(&mut out, ts, &log_dist, "#333");
    out.push_str("</svg>\n");
    out
}
