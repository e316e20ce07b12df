//! Study outputs: fixed-layout CSV files, JSON summaries and SVG heatmaps.
//!
//! Floats are written in shortest round-trip form, so re-parsing a CSV
//! reproduces the in-memory doubles bit for bit.

use crate::error::Result;
use crate::harness::study::StudyResult;
use crate::mesh::Mesh2D;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// The fixed column layout of `study.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCsvRow {
    pub level: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    pub pumping: f64,
    pub metabolic: f64,
    pub diffusive: f64,
    pub total: f64,
    pub error: Option<f64>,
    pub order: Option<f64>,
}

impl StudyCsvRow {
    pub fn from_study(result: &StudyResult) -> Vec<Self> {
        result
            .records
            .iter()
            .map(|rec| StudyCsvRow {
                level: rec.level,
                n: rec.n,
                h: rec.h,
                pumping: rec.energy.pumping,
                metabolic: rec.energy.metabolic,
                diffusive: rec.energy.diffusive,
                total: rec.energy.total,
                error: rec.error,
                order: rec.order,
            })
            .collect()
    }
}

/// One row of a flow-trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCsvRow {
    pub t: f64,
    pub pumping: f64,
    pub metabolic: f64,
    pub diffusive: f64,
    pub total: f64,
    pub min_c: f64,
    pub max_c: f64,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for record in reader.deserialize() {
        out.push(record?);
    }
    Ok(out)
}

pub fn write_summary_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path)?;
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}

fn color(t: f64) -> String {
    // linear blue -> white -> red
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let s = t / 0.5;
        lerp3((59.0, 76.0, 192.0), (240.0, 240.0, 240.0), s)
    } else {
        let s = (t - 0.5) / 0.5;
        lerp3((240.0, 240.0, 240.0), (180.0, 4.0, 38.0), s)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

fn lerp3(a: (f64, f64, f64), b: (f64, f64, f64), s: f64) -> (f64, f64, f64) {
    (
        a.0 + s * (b.0 - a.0),
        a.1 + s * (b.1 - a.1),
        a.2 + s * (b.2 - a.2),
    )
}

const SVG_SIZE: f64 = 640.0;
const SVG_MARGIN: f64 = 40.0;

fn svg_header(title: &str) -> String {
    let total = SVG_SIZE + 2.0 * SVG_MARGIN;
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total}\" height=\"{}\" viewBox=\"0 0 {total} {}\">\n<text x=\"{SVG_MARGIN}\" y=\"24\" font-family=\"monospace\" font-size=\"14\">{title}</text>\n",
        total + 20.0,
        total + 20.0
    )
}

fn to_px(x: f64, y: f64) -> (f64, f64) {
    // flip y so the origin sits bottom-left
    (SVG_MARGIN + x * SVG_SIZE, SVG_MARGIN + (1.0 - y) * SVG_SIZE)
}

fn min_max(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo, lo + 1.0)
    } else {
        (lo, hi)
    }
}

fn svg_footer(lo: f64, hi: f64) -> String {
    format!(
        "<text x=\"{SVG_MARGIN}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">min = {lo:.6e}   max = {hi:.6e}</text>\n</svg>\n",
        SVG_MARGIN + SVG_SIZE + 28.0
    )
}

/// Heatmap of a per-triangle field (piecewise-constant cells, linear color
/// scale, min/max annotated).
pub fn triangle_heatmap_svg(mesh: &Mesh2D, values: &[f64], title: &str) -> String {
    let (lo, hi) = min_max(values);
    let mut out = svg_header(title);
    for t in 0..mesh.n_triangles() {
        let coords = mesh.triangle_coords(t);
        let pts: Vec<String> = coords
            .iter()
            .map(|&(x, y)| {
                let (px, py) = to_px(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let fill = color((values[t] - lo) / (hi - lo));
        out.push_str(&format!(
            "<polygon points=\"{}\" fill=\"{fill}\" stroke=\"none\"/>\n",
            pts.join(" ")
        ));
    }
    out.push_str(&svg_footer(lo, hi));
    out
}

/// Heatmap of a per-node field drawn as the h-sized squares around the nodes.
pub fn node_heatmap_svg(mesh: &Mesh2D, values: &[f64], title: &str) -> String {
    let (lo, hi) = min_max(values);
    let h = mesh.h();
    let mut out = svg_header(title);
    for v in 0..mesh.n_nodes() {
        let (x, y) = mesh.node_xy(v);
        let x0 = (x - 0.5 * h).max(0.0);
        let x1 = (x + 0.5 * h).min(1.0);
        let y0 = (y - 0.5 * h).max(0.0);
        let y1 = (y + 0.5 * h).min(1.0);
        let (px, py) = to_px(x0, y1);
        let w = (x1 - x0) * SVG_SIZE;
        let ht = (y1 - y0) * SVG_SIZE;
        let fill = color((values[v] - lo) / (hi - lo));
        out.push_str(&format!(
            "<rect x=\"{px:.2}\" y=\"{py:.2}\" width=\"{w:.2}\" height=\"{ht:.2}\" fill=\"{fill}\" stroke=\"none\"/>\n"
        ));
    }
    out.push_str(&svg_footer(lo, hi));
    out
}

pub fn write_svg(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)?;
    Ok(())
}
