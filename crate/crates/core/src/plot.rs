//! Deterministic SVG rendering: log-log degree scatter plots with fitted
//! power-law lines, and efficiency-versus-iteration curves. No plotting
//! dependency is worth the nondeterminism here; the figures are simple and
//! byte-stable output makes runs diffable.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::analysis::{DegreeHistogram, PowerLawFit};
use crate::engine::IterationRecord;
use crate::io::SchemaError;

/// The plot kinds the command line can render.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    LoglogDegree,
    EfficiencyCurve,
}

impl PlotKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlotKind::LoglogDegree => "loglog-degree",
            PlotKind::EfficiencyCurve => "efficiency-curve",
        }
    }
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "loglog-degree" => Ok(PlotKind::LoglogDegree),
            "efficiency-curve" => Ok(PlotKind::EfficiencyCurve),
            other => Err(format!(
                "unknown plot kind `{other}`; expected loglog-degree or efficiency-curve"
            )),
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 620.0;
const TOP: f64 = 45.0;
const BOTTOM: f64 = 430.0;

const SERIES_COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
];

fn esc(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
    );
    let _ = writeln!(
        s,
        r##"<text x="{:.2}" y="24" font-family="monospace" font-size="15" text-anchor="middle">{}</text>"##,
        (LEFT + RIGHT) / 2.0,
        esc(title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="#000000"/>"##,
        RIGHT - LEFT,
        BOTTOM - TOP
    );
    s
}

fn axis_label(s: &mut String, text: &str, x: f64, y: f64, vertical: bool) {
    if vertical {
        let _ = writeln!(
            s,
            r##"<text x="{x:.2}" y="{y:.2}" font-family="monospace" font-size="13" text-anchor="middle" transform="rotate(-90 {x:.2} {y:.2})">{}</text>"##,
            esc(text)
        );
    } else {
        let _ = writeln!(
            s,
            r##"<text x="{x:.2}" y="{y:.2}" font-family="monospace" font-size="13" text-anchor="middle">{}</text>"##,
            esc(text)
        );
    }
}

/// Log-log scatter of a degree histogram with the fitted lines drawn over
/// the tail each fit covers. Needs at least one positive-degree bucket.
pub fn loglog_degree_svg(
    hist: &DegreeHistogram,
    fits: &[PowerLawFit],
    title: &str,
) -> Result<String, SchemaError> {
    let points: Vec<(usize, usize)> = hist
        .counts()
        .iter()
        .filter(|&(&d, &c)| d >= 1 && c > 0)
        .map(|(&d, &c)| (d, c))
        .collect();
    if points.is_empty() {
        return Err(SchemaError {
            what: "degree histogram",
            detail: "no positive degrees to plot".into(),
        });
    }
    let max_degree = points.last().unwrap().0 as f64;
    let max_count = points.iter().map(|&(_, c)| c).max().unwrap() as f64;
    let x_decades = max_degree.log10().ceil().max(1.0);
    let y_decades = max_count.log10().ceil().max(1.0);
    let x_of = |d: f64| LEFT + d.log10() / x_decades * (RIGHT - LEFT);
    let y_of = |c: f64| BOTTOM - c.log10() / y_decades * (BOTTOM - TOP);

    let mut s = svg_open(title);
    for decade in 0..=(x_decades as usize) {
        let x = LEFT + decade as f64 / x_decades * (RIGHT - LEFT);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{BOTTOM}" x2="{x:.2}" y2="{:.2}" stroke="#000000"/>"##,
            BOTTOM + 5.0
        );
        axis_label(&mut s, &format!("1e{decade}"), x, BOTTOM + 20.0, false);
    }
    for decade in 0..=(y_decades as usize) {
        let y = BOTTOM - decade as f64 / y_decades * (BOTTOM - TOP);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#000000"/>"##,
            LEFT - 5.0
        );
        axis_label(&mut s, &format!("1e{decade}"), LEFT - 30.0, y + 4.0, false);
    }
    axis_label(&mut s, "in-degree", (LEFT + RIGHT) / 2.0, HEIGHT - 12.0, false);
    axis_label(&mut s, "documents", 20.0, (TOP + BOTTOM) / 2.0, true);

    for &(d, c) in &points {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#333333"/>"##,
            x_of(d as f64),
            y_of(c as f64)
        );
    }

    for (i, fit) in fits.iter().enumerate() {
        let color = SERIES_COLORS[(i + 1) % SERIES_COLORS.len()];
        // Anchor the line at the empirical count of the first covered
        // bucket and descend with slope -exponent in log-log space.
        let anchor_count = points
            .iter()
            .find(|&&(d, _)| d >= fit.xmin)
            .map(|&(_, c)| c as f64)
            .unwrap_or(max_count);
        let anchor_degree = points
            .iter()
            .find(|&&(d, _)| d >= fit.xmin)
            .map(|&(d, _)| d as f64)
            .unwrap_or(1.0);
        let end_degree = max_degree.max(anchor_degree * 1.5);
        let count_at = |d: f64| anchor_count * (d / anchor_degree).powf(-fit.exponent);
        let dash = if i == 0 { "" } else { r#" stroke-dasharray="6 4""# };
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"##,
            x_of(anchor_degree),
            y_of(count_at(anchor_degree)),
            x_of(end_degree),
            y_of(count_at(end_degree).max(1e-6))
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" font-family="monospace" font-size="12" fill="{color}">{}</text>"##,
            LEFT + 10.0,
            TOP + 18.0 + 16.0 * i as f64,
            esc(&format!(
                "{:?}: exponent={:.3} xmin={} goodness={:.3}",
                fit.method, fit.exponent, fit.xmin, fit.goodness
            ))
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Efficiency-versus-iteration polylines, one per named series. Every
/// series needs at least one record.
pub fn efficiency_curves_svg(
    series: &[(String, Vec<IterationRecord>)],
    title: &str,
) -> Result<String, SchemaError> {
    if series.is_empty() {
        return Err(SchemaError {
            what: "trajectory set",
            detail: "no series to plot".into(),
        });
    }
    if let Some((name, _)) = series.iter().find(|(_, records)| records.is_empty()) {
        return Err(SchemaError {
            what: "trajectory csv",
            detail: format!("series `{name}` has no iterations"),
        });
    }
    let max_iter = series
        .iter()
        .flat_map(|(_, r)| r.iter().map(|rec| rec.iteration))
        .max()
        .unwrap()
        .max(1);
    let x_of = |it: f64| LEFT + (it - 1.0) / (max_iter.max(2) - 1) as f64 * (RIGHT - LEFT);
    let y_of = |eff: f64| BOTTOM - eff * (BOTTOM - TOP);

    let mut s = svg_open(title);
    for i in 0..=4 {
        let eff = i as f64 / 4.0;
        let y = y_of(eff);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#000000"/>"##,
            LEFT - 5.0
        );
        axis_label(&mut s, &format!("{eff:.2}"), LEFT - 30.0, y + 4.0, false);
    }
    let x_step = (max_iter / 6).max(1);
    let mut tick = 1;
    while tick <= max_iter {
        let x = x_of(tick as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{BOTTOM}" x2="{x:.2}" y2="{:.2}" stroke="#000000"/>"##,
            BOTTOM + 5.0
        );
        axis_label(&mut s, &tick.to_string(), x, BOTTOM + 20.0, false);
        tick += x_step;
    }
    axis_label(&mut s, "iteration", (LEFT + RIGHT) / 2.0, HEIGHT - 12.0, false);
    axis_label(&mut s, "efficiency", 20.0, (TOP + BOTTOM) / 2.0, true);

    for (i, (name, records)) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        let path: Vec<String> = records
            .iter()
            .map(|r| format!("{:.2},{:.2}", x_of(r.iteration as f64), y_of(r.efficiency)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"##,
            path.join(" ")
        );
        let ly = TOP + 18.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="3"/>"##,
            LEFT + 10.0,
            ly - 4.0,
            LEFT + 30.0,
            ly - 4.0
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{ly:.2}" font-family="monospace" font-size="12">{}</text>"##,
            LEFT + 36.0,
            esc(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
