//! Minimal SVG line and bar charts.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let span = |v: &mut dyn Iterator<Item = f64>| {
            v.filter(|x| x.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                    (a.min(x), b.max(x))
                })
        };
        let (mut x0, mut x1) = span(&mut xs.clone());
        let (mut y0, mut y1) = span(&mut ys.clone());
        if !x0.is_finite() {
            (x0, x1) = (0.0, 1.0);
        }
        if !y0.is_finite() {
            (y0, y1) = (0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x1 = x0 + 1.0;
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        Frame {
            x0,
            x1,
            y0: y0 - pad,
            y1: y1 + pad,
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn head(out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0,
        escape(xlabel)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">{}</text>"#,
        escape(ylabel),
        y = (TOP + H - BOTTOM) / 2.0
    )
    .unwrap();
}

fn axes(out: &mut String, f: &Frame, x_ticks: bool) {
    let (bx, by) = (LEFT, H - BOTTOM);
    writeln!(
        out,
        r#"<path d="M{bx} {TOP} V{by} H{}" fill="none" stroke="black"/>"#,
        W - RIGHT
    )
    .unwrap();
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let y = f.y0 + t * (f.y1 - f.y0);
        writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            bx - 6.0,
            f.py(y) + 4.0,
            tick(y)
        )
        .unwrap();
        if x_ticks {
            let x = f.x0 + t * (f.x1 - f.x0);
            writeln!(
                out,
                r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
                f.px(x),
                by + 16.0,
                tick(x)
            )
            .unwrap();
        }
    }
    if f.y0 < 0.0 && f.y1 > 0.0 {
        writeln!(
            out,
            r##"<line x1="{bx}" x2="{}" y1="{y:.1}" y2="{y:.1}" stroke="#999" stroke-dasharray="3 3"/>"##,
            W - RIGHT,
            y = f.py(0.0)
        )
        .unwrap();
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 1e-2 && v.abs() < 1e4) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = W - RIGHT + 12.0;
        writeln!(
            out,
            r#"<rect x="{x}" y="{}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            y - 10.0,
            COLORS[i % COLORS.len()],
            x + 18.0,
            y,
            escape(name)
        )
        .unwrap();
    }
}

pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let f = Frame::fit(
        series.iter().flat_map(|s| s.points.iter().map(|p| p.0)),
        series.iter().flat_map(|s| s.points.iter().map(|p| p.1)),
    );
    let mut out = String::new();
    head(&mut out, title, xlabel, ylabel);
    axes(&mut out, &f, true);
    for (i, s) in series.iter().enumerate() {
        let d: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .enumerate()
            .map(|(k, &(x, y))| {
                format!(
                    "{}{:.2} {:.2}",
                    if k == 0 { "M" } else { "L" },
                    f.px(x),
                    f.py(y)
                )
            })
            .collect();
        writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            d.join(" "),
            COLORS[i % COLORS.len()]
        )
        .unwrap();
    }
    legend(
        &mut out,
        &series.iter().map(|s| s.name.as_str()).collect::<Vec<_>>(),
    );
    out.push_str("</svg>\n");
    out
}

/// Grouped bars: one group per category, one bar per series.
pub fn bar_chart(
    title: &str,
    ylabel: &str,
    categories: &[String],
    series: &[(String, Vec<f64>)],
) -> String {
    let n = categories.len().max(1) as f64;
    let mut f = Frame::fit(
        [0.0, n].into_iter(),
        series.iter().flat_map(|s| s.1.iter().copied()).chain([0.0]),
    );
    f.x0 = 0.0;
    f.x1 = n;
    let mut out = String::new();
    head(&mut out, title, "", ylabel);
    axes(&mut out, &f, false);
    let k = series.len().max(1) as f64;
    let bw = 0.8 / k;
    for (c, cat) in categories.iter().enumerate() {
        writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            f.px(c as f64 + 0.5),
            H - BOTTOM + 16.0,
            escape(cat)
        )
        .unwrap();
        for (i, (_, vals)) in series.iter().enumerate() {
            let Some(&v) = vals.get(c) else { continue };
            if !v.is_finite() {
                continue;
            }
            let x = f.px(c as f64 + 0.1 + bw * i as f64);
            let (ya, yb) = (f.py(v.max(0.0)), f.py(v.min(0.0)));
            writeln!(
                out,
                r#"<rect x="{x:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                f.px(bw) - f.px(0.0),
                yb - ya,
                COLORS[i % COLORS.len()]
            )
            .unwrap();
        }
    }
    legend(
        &mut out,
        &series.iter().map(|s| s.0.as_str()).collect::<Vec<_>>(),
    );
    out.push_str("</svg>\n");
    out
}
