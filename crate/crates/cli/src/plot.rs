//! Log-log SVG plots. Every plot is drawn from a table of points that is
//! also written as CSV, so `gmwm plot` can redraw it from that file alone.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use clap::ValueEnum;
use gmwm::wv::fmt_num;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum PlotKind {
    Wv,
    WvCompare,
    FitOverlay,
    FitDecomposition,
    AutoGrid,
}

impl PlotKind {
    fn name(self) -> &'static str {
        match self {
            PlotKind::Wv => "wv",
            PlotKind::WvCompare => "wv_compare",
            PlotKind::FitOverlay => "fit_overlay",
            PlotKind::FitDecomposition => "fit_decomposition",
            PlotKind::AutoGrid => "auto_grid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub ci: bool,
    pub title: Option<String>,
}

/// How a series is drawn: empirical estimates are solid with markers and an
/// interval ribbon, implied values dashed, per-process parts dotted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Empirical,
    Implied,
    Component,
}

/// One point of one series in one panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub panel: String,
    pub series: String,
    pub role: Role,
    pub x: f64,
    pub y: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl PlotRow {
    pub fn new(panel: &str, series: &str, role: Role, x: f64, y: f64) -> PlotRow {
        PlotRow {
            panel: panel.to_string(),
            series: series.to_string(),
            role,
            x,
            y,
            lo: None,
            hi: None,
        }
    }

    pub fn with_ci(mut self, lo: f64, hi: f64) -> PlotRow {
        self.lo = Some(lo);
        self.hi = Some(hi);
        self
    }
}

pub fn write_rows_csv<W: std::io::Write>(rows: &[PlotRow], out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["panel", "series", "role", "x", "y", "lo", "hi"])?;
    for r in rows {
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        let role = match r.role {
            Role::Empirical => "empirical",
            Role::Implied => "implied",
            Role::Component => "component",
        };
        w.write_record([r.panel.clone(), r.series.clone(), role.to_string(), fmt_num(r.x), fmt_num(r.y), opt(r.lo), opt(r.hi)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows_csv<R: Read>(input: R) -> CliResult<Vec<PlotRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        let r: PlotRow = rec.map_err(|e| CliError::data(format!("plot data: {e}")))?;
        rows.push(r);
    }
    if rows.is_empty() {
        return Err(CliError::data("plot data has no rows"));
    }
    Ok(rows)
}

/// Writes `path` (SVG) and its companion CSV next to it.
pub fn write_plot(path: &Path, rows: &[PlotRow], spec: &PlotSpec) -> CliResult<()> {
    let svg = render(rows, spec)?;
    std::fs::write(path, svg)?;
    let csv_path = path.with_extension("csv");
    write_rows_csv(rows, std::fs::File::create(csv_path)?)
}

const PALETTE: [&str; 8] = ["#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d35400", "#16a085", "#7f8c8d", "#b7950b"];
const PANEL_W: f64 = 520.0;
const PANEL_H: f64 = 380.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 50.0;

struct Panel<'a> {
    name: &'a str,
    series: Vec<(&'a str, Role, Vec<&'a PlotRow>)>,
}

fn panels(rows: &[PlotRow]) -> Vec<Panel<'_>> {
    let mut out: Vec<Panel> = Vec::new();
    for r in rows {
        let p = match out.iter().position(|p| p.name == r.panel) {
            Some(i) => &mut out[i],
            None => {
                out.push(Panel {
                    name: &r.panel,
                    series: Vec::new(),
                });
                out.last_mut().unwrap()
            }
        };
        match p.series.iter_mut().find(|s| s.0 == r.series) {
            Some(s) => s.2.push(r),
            None => p.series.push((&r.series, r.role, vec![r])),
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Decade range covering every positive value.
fn log_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| *v > 0.0 && v.is_finite())
        .map(f64::log10)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return None;
    }
    let (a, b) = (lo.floor(), hi.ceil());
    Some(if a == b { (a - 1.0, b + 1.0) } else { (a, b) })
}

/// SVG text of a plot. A pure function of the rows and the spec.
pub fn render(rows: &[PlotRow], spec: &PlotSpec) -> CliResult<String> {
    let panels = panels(rows);
    if panels.is_empty() {
        return Err(CliError::data("nothing to plot"));
    }
    let cols = match spec.kind {
        PlotKind::AutoGrid => (panels.len() as f64).sqrt().ceil() as usize,
        _ => panels.len().min(2),
    };
    let nrows = panels.len().div_ceil(cols);
    let title_h = if spec.title.is_some() { 30.0 } else { 0.0 };
    let width = cols as f64 * PANEL_W;
    let height = nrows as f64 * PANEL_H + title_h;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<desc>gmwm plot: {}</desc>"#, spec.kind.name());
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    if let Some(t) = &spec.title {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="16">{}</text>"#,
            width / 2.0,
            escape(t)
        );
    }
    for (k, p) in panels.iter().enumerate() {
        let ox = (k % cols) as f64 * PANEL_W;
        let oy = (k / cols) as f64 * PANEL_H + title_h;
        draw_panel(&mut s, p, spec, ox, oy)?;
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn draw_panel(s: &mut String, p: &Panel, spec: &PlotSpec, ox: f64, oy: f64) -> CliResult<()> {
    let all = || p.series.iter().flat_map(|x| x.2.iter());
    let xr = log_range(all().map(|r| r.x)).ok_or_else(|| CliError::data(format!("panel {}: no positive scale", p.name)))?;
    let yr = log_range(all().flat_map(|r| {
        let band = spec.ci && r.role == Role::Empirical;
        [Some(r.y), r.lo.filter(|_| band), r.hi.filter(|_| band)].into_iter().flatten()
    }))
    .ok_or_else(|| CliError::data(format!("panel {}: no positive values to draw on log axes", p.name)))?;
    let (x0, y0) = (ox + MARGIN_L, oy + MARGIN_T);
    let (w, h) = (PANEL_W - MARGIN_L - MARGIN_R, PANEL_H - MARGIN_T - MARGIN_B);
    let px = |x: f64| x0 + (x.log10() - xr.0) / (xr.1 - xr.0) * w;
    let py = |y: f64| y0 + h - (y.log10() - yr.0) / (yr.1 - yr.0) * h;
    let _ = writeln!(s, r#"<g>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{}</text>"#,
        x0 + w / 2.0,
        oy + 20.0,
        escape(p.name)
    );
    let _ = writeln!(s, r##"<rect x="{x0:.1}" y="{y0:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#333"/>"##);
    let step = |lo: f64, hi: f64| (((hi - lo) / 8.0).ceil() as i64).max(1);
    let sx = step(xr.0, xr.1);
    for e in (xr.0 as i64..=xr.1 as i64).filter(|e| (e - xr.0 as i64) % sx == 0) {
        let x = px(10f64.powi(e as i32));
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">10<tspan dy="-6" font-size="9">{e}</tspan></text>"##,
            y0 + h,
            y0 + h + 18.0
        );
    }
    let sy = step(yr.0, yr.1);
    for e in (yr.0 as i64..=yr.1 as i64).filter(|e| (e - yr.0 as i64) % sy == 0) {
        let y = py(10f64.powi(e as i32));
        let _ = writeln!(
            s,
            r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">10<tspan dy="-6" font-size="9">{e}</tspan></text>"##,
            x0 + w,
            x0 - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Scale (s)</text>"#,
        x0 + w / 2.0,
        oy + PANEL_H - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">Variance</text>"#,
        ox + 16.0,
        y0 + h / 2.0,
        ox + 16.0,
        y0 + h / 2.0
    );
    let visible = |r: &&&PlotRow| r.x > 0.0 && r.y > 0.0;
    for (i, (_, role, pts)) in p.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if spec.ci && *role == Role::Empirical {
            let band: Vec<&&PlotRow> = pts.iter().filter(|r| r.x > 0.0 && r.lo.is_some_and(|v| v > 0.0) && r.hi.is_some_and(|v| v > 0.0)).collect();
            if band.len() > 1 {
                let mut d = String::new();
                for r in &band {
                    let _ = write!(d, "{:.2},{:.2} ", px(r.x), py(r.hi.unwrap()));
                }
                for r in band.iter().rev() {
                    let _ = write!(d, "{:.2},{:.2} ", px(r.x), py(r.lo.unwrap()));
                }
                let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#, d.trim_end());
            }
        }
        let mut d = String::new();
        for r in pts.iter().filter(visible) {
            let _ = write!(d, "{:.2},{:.2} ", px(r.x), py(r.y));
        }
        let dash = match role {
            Role::Empirical => "",
            Role::Implied => r#" stroke-dasharray="7 4""#,
            Role::Component => r#" stroke-dasharray="2 3""#,
        };
        let width = if *role == Role::Component { 1.2 } else { 1.8 };
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>"#, d.trim_end());
        if *role == Role::Empirical {
            for r in pts.iter().filter(visible) {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(r.x), py(r.y));
            }
        }
    }
    let longest = p.series.iter().map(|x| x.0.chars().count()).max().unwrap_or(0) as f64;
    let n = p.series.len() as f64;
    let _ = writeln!(
        s,
        r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="white" fill-opacity="0.85" stroke="#bbb"/>"##,
        x0 + 4.0,
        y0 + h - 24.0 - 16.0 * (n - 1.0),
        longest * 6.8 + 40.0,
        16.0 * n + 4.0
    );
    for (i, (name, role, _)) in p.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let (lx, ly) = (x0 + 10.0, y0 + h - 12.0 - 16.0 * (p.series.len() - 1 - i) as f64);
        let dash = match role {
            Role::Empirical => "",
            Role::Implied => r#" stroke-dasharray="7 4""#,
            Role::Component => r#" stroke-dasharray="2 3""#,
        };
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="1.8"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(name)
        );
    }
    let _ = writeln!(s, "</g>");
    Ok(())
}
