//! Deterministic artifact emission: CSV with `#`-prefixed provenance
//! headers, JSON documents, and a dependency-free SVG line plotter. Nothing
//! here reads the clock — identical inputs produce identical bytes, so
//! emitted artifacts diff cleanly across runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value, json};

/// A rectangular numeric table plus its provenance and any named constants.
#[derive(Debug, Clone)]
pub struct Table {
    /// Ordered `key = value` provenance lines for the header.
    pub provenance: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Reference levels that belong with the table but not in the grid.
    pub constants: Vec<(String, f64)>,
}

/// Shortest-roundtrip decimal text for one value; NaN spelled out.
fn num(x: f64) -> String {
    if x.is_nan() { "NaN".to_string() } else { x.to_string() }
}

pub fn to_csv(table: &Table) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# cvdistill {}", env!("CARGO_PKG_VERSION"));
    for (key, value) in &table.provenance {
        let _ = writeln!(out, "# {key} = {value}");
    }
    for (name, value) in &table.constants {
        let _ = writeln!(out, "# {name} = {}", num(*value));
    }
    let _ = writeln!(out, "{}", table.columns.join(","));
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// JSON mirror of the CSV artifact. Non-finite numbers map to `null` since
/// JSON has no NaN.
pub fn to_json(table: &Table) -> String {
    let jnum = |x: f64| serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
    let mut provenance = Map::new();
    provenance.insert("tool".into(), json!("cvdistill"));
    provenance.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    for (key, value) in &table.provenance {
        provenance.insert(key.clone(), Value::String(value.clone()));
    }
    let mut constants = Map::new();
    for (name, value) in &table.constants {
        constants.insert(name.clone(), jnum(*value));
    }
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| Value::Array(row.iter().map(|&x| jnum(x)).collect()))
        .collect();
    let doc = json!({
        "provenance": Value::Object(provenance),
        "columns": table.columns,
        "rows": rows,
        "constants": Value::Object(constants),
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("tables serialize");
    text.push('\n');
    text
}

const PLOT_W: f64 = 640.0;
const PLOT_H: f64 = 400.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Minimal line plot: the first column is the x axis, every other column a
/// polyline. Constants draw as dashed horizontal reference lines.
pub fn to_svg(table: &Table, title: &str) -> String {
    let xs: Vec<f64> = table.rows.iter().map(|r| r[0]).collect();
    let mut ys_min = f64::INFINITY;
    let mut ys_max = f64::NEG_INFINITY;
    for row in &table.rows {
        for &y in &row[1..] {
            if y.is_finite() {
                ys_min = ys_min.min(y);
                ys_max = ys_max.max(y);
            }
        }
    }
    for (_, c) in &table.constants {
        if c.is_finite() {
            ys_min = ys_min.min(*c);
            ys_max = ys_max.max(*c);
        }
    }
    let (x_lo, x_hi) = bounds(&xs);
    let (y_lo, y_hi) = pad(ys_min, ys_max);
    let sx = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (PLOT_W - MARGIN_L - MARGIN_R);
    let sy = |y: f64| PLOT_H - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (PLOT_H - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {PLOT_W} {PLOT_H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{PLOT_W}" height="{PLOT_H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        PLOT_W / 2.0,
        escape(title)
    );
    // Axes and their extreme tick labels.
    let _ = writeln!(
        svg,
        r#"<path d="M {l} {t} L {l} {b} L {r} {b}" fill="none" stroke="black"/>"#,
        l = MARGIN_L,
        t = MARGIN_T,
        b = PLOT_H - MARGIN_B,
        r = PLOT_W - MARGIN_R
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        MARGIN_L,
        PLOT_H - MARGIN_B + 16.0,
        fmt_tick(x_lo)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        PLOT_W - MARGIN_R,
        PLOT_H - MARGIN_B + 16.0,
        fmt_tick(x_hi)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        MARGIN_L - 6.0,
        PLOT_H - MARGIN_B + 4.0,
        fmt_tick(y_lo)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        MARGIN_L - 6.0,
        MARGIN_T + 4.0,
        fmt_tick(y_hi)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (MARGIN_L + PLOT_W - MARGIN_R) / 2.0,
        PLOT_H - 8.0,
        escape(&table.columns[0])
    );
    // Dashed reference levels.
    for (idx, (name, value)) in table.constants.iter().enumerate() {
        if !value.is_finite() {
            continue;
        }
        let y = sy(*value);
        let color = PALETTE[(table.columns.len() - 1 + idx) % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-dasharray="5 4"/>"#,
            MARGIN_L,
            PLOT_W - MARGIN_R
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            PLOT_W - MARGIN_R - 60.0,
            y - 4.0,
            escape(name)
        );
    }
    // One polyline per data column.
    for (col, name) in table.columns.iter().enumerate().skip(1) {
        let color = PALETTE[(col - 1) % PALETTE.len()];
        let points: Vec<String> = table
            .rows
            .iter()
            .filter(|r| r[col].is_finite())
            .map(|r| format!("{:.2},{:.2}", sx(r[0]), sy(r[col])))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            MARGIN_L + 8.0,
            MARGIN_T + 14.0 * col as f64,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(xs: &[f64]) -> (f64, f64) {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    pad(lo, hi)
}

fn pad(lo: f64, hi: f64) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn fmt_tick(x: f64) -> String {
    format!("{x:.4}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// The sibling path used for `--plot`: the output path with an `.svg`
/// extension.
pub fn svg_path(out: &Path) -> PathBuf {
    out.with_extension("svg")
}
