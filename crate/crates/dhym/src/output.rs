//! File emitters. Floats are printed in shortest round-trip form everywhere,
//! so identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Output directory, created on first use.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: Option<PathBuf>,
}

impl OutDir {
    pub fn new(root: Option<PathBuf>) -> Self {
        Self { root }
    }

    pub fn is_enabled(&self) -> bool {
        self.root.is_some()
    }

    fn path(&self, name: &str) -> Result<Option<PathBuf>, CliError> {
        match &self.root {
            None => Ok(None),
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
                Ok(Some(dir.join(name)))
            }
        }
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(p) = self.path(name)? {
            fs::write(&p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        self.write_bytes(name, to_json(value)?.as_bytes())
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        self.write_bytes(name, text.as_bytes())
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Minimal CSV builder; cells are numbers or plain identifiers.
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text, width: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.width);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Shortest round-trip decimal; non-finite values as `nan` / `inf`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Little-endian `f64` samples.
pub fn field_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn read_field(path: &Path) -> Result<Vec<f64>, CliError> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(CliError::Parse(format!("{}: length is not a multiple of 8", path.display())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct FieldSidecar {
    pub file: String,
    pub dtype: String,
    pub order: String,
    pub shape: Vec<usize>,
    pub axes: Vec<String>,
    pub spacing: f64,
}

const SVG_SIZE: f64 = 480.0;
const SVG_PAD: f64 = 32.0;

struct Frame {
    lo: (f64, f64),
    scale: f64,
}

impl Frame {
    /// Equal-aspect frame around the points (and the origin, if asked).
    fn fit(points: &[(f64, f64)], include_origin: bool) -> Self {
        let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let mut ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        if include_origin {
            xs.push(0.0);
            ys.push(0.0);
        }
        let (x0, x1) = (xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let (y0, y1) = (ys.iter().copied().fold(f64::INFINITY, f64::min), ys.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let span = (x1 - x0).max(y1 - y0).max(1e-300);
        Self { lo: (x0 - 0.5 * (span - (x1 - x0)), y0 - 0.5 * (span - (y1 - y0))), scale: (SVG_SIZE - 2.0 * SVG_PAD) / span }
    }

    fn map(&self, p: (f64, f64)) -> (f64, f64) {
        (SVG_PAD + (p.0 - self.lo.0) * self.scale, SVG_SIZE - SVG_PAD - (p.1 - self.lo.1) * self.scale)
    }
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{SVG_PAD}" y="20" font-family="monospace" font-size="12">{}</text>"#, escape(title));
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A path in the complex plane with the origin marked.
pub fn complex_path_svg(title: &str, points: &[(f64, f64)]) -> String {
    let frame = Frame::fit(points, true);
    let mut s = svg_open(title);
    let (ox, oy) = frame.map((0.0, 0.0));
    let _ = writeln!(s, r##"<line x1="{SVG_PAD}" y1="{oy:.3}" x2="{:.3}" y2="{oy:.3}" stroke="#bbb"/>"##, SVG_SIZE - SVG_PAD);
    let _ = writeln!(s, r##"<line x1="{ox:.3}" y1="{SVG_PAD}" x2="{ox:.3}" y2="{:.3}" stroke="#bbb"/>"##, SVG_SIZE - SVG_PAD);
    let pts: Vec<String> = points
        .iter()
        .map(|&p| {
            let (x, y) = frame.map(p);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(s, r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="1.5" points="{}"/>"##, pts.join(" "));
    if let Some(&last) = points.last() {
        let (x, y) = frame.map(last);
        let _ = writeln!(s, r##"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="#1f5fa8"/>"##);
    }
    let _ = writeln!(s, r##"<circle cx="{ox:.3}" cy="{oy:.3}" r="4" fill="none" stroke="#c0392b" stroke-width="1.5"/>"##);
    s.push_str("</svg>\n");
    s
}

/// Heat map of `log10(value)` on a `rows × cols` grid (row-major, first axis down).
pub fn heat_map_svg(title: &str, rows: usize, cols: usize, values: &[f64]) -> String {
    let logs: Vec<f64> = values.iter().map(|v| v.max(1e-300).log10()).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cell_w = (SVG_SIZE - 2.0 * SVG_PAD) / cols as f64;
    let cell_h = (SVG_SIZE - 2.0 * SVG_PAD) / rows as f64;
    let mut s = svg_open(&format!("{title} (log10 range {} .. {})", num(lo), num(hi)));
    for r in 0..rows {
        for c in 0..cols {
            let t = (logs[r * cols + c] - lo) / span;
            let shade = (255.0 * (1.0 - t)).round() as u8;
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="rgb(255,{shade},{shade})"/>"#,
                SVG_PAD + c as f64 * cell_w,
                SVG_PAD + r as f64 * cell_h,
                cell_w,
                cell_h
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
