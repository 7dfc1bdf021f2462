//! Data tables, their CSV and SVG renderings, and the JSON result envelope.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

/// Column-oriented numeric table written as one data file.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// `key: value` lines written as `#` comments.
    pub metadata: Vec<(String, String)>,
    pub plot: Option<Plot>,
}

/// Line plot of some columns against one abscissa column.
#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x: usize,
    pub y: Vec<usize>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: Vec::new(),
            plot: None,
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn plotted(mut self, title: &str, x: usize, y: &[usize]) -> Self {
        self.plot = Some(Plot { title: title.into(), x, y: y.to_vec() });
        self
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[i]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "name": self.name,
            "metadata": self.metadata.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect::<serde_json::Map<_, _>>(),
            "columns": self.columns,
            "rows": self.rows,
        })
    }

    /// SVG line chart, or `None` without a plot spec or data.
    pub fn to_svg(&self) -> Option<String> {
        let plot = self.plot.as_ref()?;
        if self.rows.len() < 2 {
            return None;
        }
        Some(line_chart(self, plot))
    }
}

const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn line_chart(table: &Table, plot: &Plot) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (90.0, 20.0, 40.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let xs = table.column(plot.x);
    let (x0, x1) = bounds(xs.iter().copied());
    let (y0, y1) = bounds(plot.y.iter().flat_map(|&c| table.column(c)));
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(&plot.title));
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(s, r#"<line x1="{px:.1}" y1="{}" x2="{px:.1}" y2="{}" stroke="black"/>"#, top + ph, top + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{px:.1}" y="{}" text-anchor="middle">{xv:.3e}</text>"#, top + ph + 18.0);
        let _ = writeln!(s, r#"<line x1="{}" y1="{py:.1}" x2="{left}" y2="{py:.1}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{yv:.3e}</text>"#, left - 8.0, py + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 15.0, escape(&table.columns[plot.x]));
    for (k, &c) in plot.y.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let points: Vec<String> = table
            .rows
            .iter()
            .filter(|r| r[plot.x].is_finite() && r[c].is_finite())
            .map(|r| format!("{:.2},{:.2}", sx(r[plot.x]), sy(r[c])))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, points.join(" "));
        let ly = top + 16.0 + 16.0 * k as f64;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/>"#, left + pw - 120.0, left + pw - 100.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, left + pw - 95.0, ly + 4.0, escape(&table.columns[c]));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// Writes every table in `format` (SVG also writes the CSV next to the
/// plot) and returns the paths written.
pub fn write_tables(dir: &Path, tables: &[Table], format: Format) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for t in tables {
        let mut put = |ext: &str, body: String| -> std::io::Result<()> {
            let path = dir.join(format!("{}.{ext}", t.name));
            std::fs::write(&path, body)?;
            written.push(path);
            Ok(())
        };
        match format {
            Format::Csv => put("csv", t.to_csv())?,
            Format::Json => put("json", serde_json::to_string_pretty(&t.to_json()).expect("table serializes"))?,
            Format::Svg => {
                put("csv", t.to_csv())?;
                if let Some(svg) = t.to_svg() {
                    put("svg", svg)?;
                }
            }
        }
    }
    Ok(written)
}

/// Machine-readable record of one run.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub scenario_hash: String,
    /// SHA-256 of the derived parameters and outputs.
    pub result_hash: String,
    pub scenario: Value,
    pub seed: u64,
    pub threads: usize,
    pub wall_time: f64,
    pub derived: Value,
    pub outputs: Value,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    pub breaches: Vec<String>,
}
