//! CSV, JSON manifest and SVG writers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One CSV field. Floats are written with the shortest representation
/// that parses back to the same value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    Int(i64),
    Float(f64),
    Missing,
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::Int(v as i64)
    }
}

impl From<u64> for Field {
    fn from(v: u64) -> Self {
        Field::Int(v as i64)
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Field::Float(v)
        } else {
            Field::Missing
        }
    }
}

impl From<Option<f64>> for Field {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Field::Missing, Field::from)
    }
}

/// A header plus rows of numeric fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Field>>,
}

impl Series {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 1));
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            for (k, f) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                match f {
                    Field::Int(v) => write!(out, "{v}").unwrap(),
                    Field::Float(v) => write!(out, "{v}").unwrap(),
                    Field::Missing => {}
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parses CSV text produced by [`Series::to_csv`]. Every non-empty
    /// field comes back as a float.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::arg("CSV has no header"))?
            .split(',')
            .map(str::to_string)
            .collect::<Vec<_>>();
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|f| {
                    if f.is_empty() {
                        Ok(Field::Missing)
                    } else {
                        f.parse::<f64>()
                            .map(Field::Float)
                            .map_err(|_| Error::arg(format!("row {}: bad field {f:?}", k + 1)))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != header.len() {
                return Err(Error::arg(format!("row {} has {} fields", k + 1, row.len())));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    /// Values of one column as floats, `None` for missing fields.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[k] {
                    Field::Int(v) => Some(v as f64),
                    Field::Float(v) => Some(v),
                    Field::Missing => None,
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// File name relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn artifact(dir: &Path, name: &str, bytes: &[u8]) -> Result<Artifact> {
    write_bytes(&dir.join(name), bytes)?;
    Ok(Artifact {
        path: name.to_string(),
        sha256: sha256_hex(bytes),
        bytes: bytes.len(),
    })
}

/// Writes `series` as `dir/name`.
pub fn emit_csv(series: &Series, dir: &Path, name: &str) -> Result<Artifact> {
    artifact(dir, name, series.to_csv().as_bytes())
}

/// Record of one run: configuration echo, emitted files and summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub artifacts: Vec<Artifact>,
    /// Excluded (degenerate) sample counts keyed by series.
    pub excluded: BTreeMap<String, usize>,
    pub metrics: BTreeMap<String, f64>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.path == name)
    }

    /// Re-hashes every listed file under `dir`.
    pub fn verify(&self, dir: &Path) -> Result<bool> {
        for a in &self.artifacts {
            let path = dir.join(&a.path);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if sha256_hex(&bytes) != a.sha256 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn emit_manifest(manifest: &RunManifest, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(MANIFEST_NAME);
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write_bytes(&path, text.as_bytes())?;
    Ok(path)
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::arg(format!("bad manifest: {e}")))
}

/// Static plot: histogram bars, overlay lines and scatter points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// `(left, right, height)`.
    pub bars: Vec<(f64, f64, f64)>,
    pub lines: Vec<Vec<(f64, f64)>>,
    pub points: Vec<(f64, f64)>,
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 60.0;
const LINE_COLOURS: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];

impl PlotSpec {
    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut xs = Vec::new();
        let mut ys = vec![0.0];
        for &(l, r, h) in &self.bars {
            xs.extend([l, r]);
            ys.push(h);
        }
        for &(x, y) in self.lines.iter().flatten().chain(&self.points) {
            xs.push(x);
            ys.push(y);
        }
        let fin = |v: &Vec<f64>| -> (f64, f64) {
            let it = v.iter().copied().filter(|x| x.is_finite());
            let lo = it.clone().fold(f64::INFINITY, f64::min);
            let hi = it.fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let (x0, x1) = fin(&xs);
        let (mut y0, mut y1) = fin(&ys);
        if !self.points.is_empty() {
            let pad = 0.05 * (y1 - y0);
            y0 -= pad;
            y1 += pad;
        } else {
            y1 *= 1.05;
        }
        (x0, x1, y0, y1)
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (SVG_W - 2.0 * MARGIN);
        let py = |y: f64| SVG_H - MARGIN - (y - y0) / (y1 - y0) * (SVG_H - 2.0 * MARGIN);
        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
        )
        .unwrap();
        s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        for &(l, r, h) in &self.bars {
            if !h.is_finite() {
                continue;
            }
            writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="#3182bd" stroke-width="0.5"/>"##,
                px(l),
                py(h),
                (px(r) - px(l)).max(0.0),
                (py(y0.max(0.0)) - py(h)).max(0.0)
            )
            .unwrap();
        }
        for (k, line) in self.lines.iter().enumerate() {
            let pts: Vec<String> = line
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                pts.join(" "),
                LINE_COLOURS[k % LINE_COLOURS.len()]
            )
            .unwrap();
        }
        for &(x, y) in &self.points {
            if x.is_finite() && y.is_finite() {
                writeln!(
                    s,
                    r##"<circle cx="{:.2}" cy="{:.2}" r="1.2" fill="#08519c" fill-opacity="0.5"/>"##,
                    px(x),
                    py(y)
                )
                .unwrap();
            }
        }
        // axes with five ticks each
        let (left, right, bottom, top) = (MARGIN, SVG_W - MARGIN, SVG_H - MARGIN, MARGIN);
        writeln!(
            s,
            r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" fill="none" stroke="black"/>"#
        )
        .unwrap();
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            writeln!(
                s,
                r#"<text x="{:.2}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
                px(xv),
                bottom + 16.0,
                tick(xv)
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
                left - 6.0,
                py(yv) + 4.0,
                tick(yv)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{}</text>"#,
            SVG_W / 2.0,
            SVG_H - 18.0,
            escape(&self.x_label)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="16" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            SVG_H / 2.0,
            SVG_H / 2.0,
            escape(&self.y_label)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="30" font-size="15" text-anchor="middle">{}</text>"#,
            SVG_W / 2.0,
            escape(&self.title)
        )
        .unwrap();
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{:.3}", v)
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn emit_svg(plot: &PlotSpec, dir: &Path, name: &str) -> Result<Artifact> {
    artifact(dir, name, plot.to_svg().as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_series_is_header_only() {
        let s = Series::new(&["t", "neg_log_mean_lambda1"]);
        assert_eq!(s.to_csv(), "t,neg_log_mean_lambda1\n");
    }

    #[test]
    fn floats_round_trip() {
        let mut s = Series::new(&["a", "b", "c"]);
        let vals = [0.1 + 0.2, 1e-300, std::f64::consts::PI];
        for v in vals {
            s.push(vec![Field::from(3usize), Field::from(v), Field::from(None)]);
        }
        let back = Series::parse_csv(&s.to_csv()).unwrap();
        let b = back.column("b").unwrap();
        for (v, w) in vals.iter().zip(b) {
            assert_eq!(v.to_bits(), w.unwrap().to_bits());
        }
        assert!(back.column("c").unwrap().iter().all(Option::is_none));
        assert_eq!(Field::from(f64::NAN), Field::Missing);
    }

    #[test]
    fn manifest_hash_matches_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Series::new(&["x"]);
        s.push(vec![Field::from(1.5)]);
        let a = emit_csv(&s, dir.path(), "x.csv").unwrap();
        let bytes = fs::read(dir.path().join("x.csv")).unwrap();
        assert_eq!(a.sha256, sha256_hex(&bytes));
        assert_eq!(a.sha256.len(), 64);
    }

    #[test]
    fn svg_is_self_contained() {
        let plot = PlotSpec {
            title: "a < b".into(),
            x_label: "z".into(),
            y_label: "density".into(),
            bars: vec![(0.0, 0.5, 1.0), (0.5, 1.0, 1.0)],
            lines: vec![vec![(0.0, 0.0), (0.5, 1.5), (1.0, 0.0)]],
            points: vec![],
        };
        let svg = plot.to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<rect").count(), 3);
        assert!(!svg.contains("href"));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let err = emit_csv(&Series::new(&["x"]), &blocker, "y.csv").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
