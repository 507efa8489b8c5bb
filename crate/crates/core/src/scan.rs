//! Slice and lattice evaluation of the flag curvature of `F*_{c,a}`.
//!
//! Lattice points use the unit fiber `(r, t) = (sin φ, cos φ)` at `y = 0`;
//! slices use `(x, 0, 0, x)`. Points that cannot be evaluated stay in the
//! output as rows with a non-ok status.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::curvature::{flag_curvature, CurvatureSample, SampleStatus};
use crate::error::{DomainViolation, Error, Result};
use crate::metric::{MetricParams, PhasePoint};

pub const DEFAULT_EXCLUDE_BAND: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub phi_min: f64,
    pub phi_max: f64,
    pub nphi: usize,
    pub c: f64,
    pub a: f64,
    /// Points with `|x|` below this are skipped.
    pub exclude_band: f64,
}

impl GridSpec {
    pub fn params(&self) -> MetricParams {
        MetricParams::new(self.a, self.c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.nphi == 0 {
            return Err(Error::Argument("grid needs nx, nphi >= 1".into()));
        }
        let bounds = [self.x_min, self.x_max, self.phi_min, self.phi_max];
        if !bounds.iter().all(|v| v.is_finite()) || self.x_min > self.x_max || self.phi_min > self.phi_max {
            return Err(Error::Argument(format!(
                "bad grid ranges x [{}, {}], phi [{}, {}]",
                self.x_min, self.x_max, self.phi_min, self.phi_max
            )));
        }
        if !(self.exclude_band >= 0.0) {
            return Err(Error::Argument("exclude band must be non-negative".into()));
        }
        Ok(())
    }

    pub fn x_at(&self, i: usize) -> f64 {
        lattice(self.x_min, self.x_max, self.nx, i)
    }

    pub fn phi_at(&self, j: usize) -> f64 {
        lattice(self.phi_min, self.phi_max, self.nphi, j)
    }
}

/// Endpoint-inclusive lattice coordinate; a single node sits at `lo`.
fn lattice(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n == 1 {
        lo
    } else if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * (i as f64 / (n - 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub c: f64,
    pub a: f64,
    pub exclude_band: f64,
}

/// One evaluated point together with its lattice angle (absent on slices).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub phi: Option<f64>,
    #[serde(flatten)]
    pub sample: CurvatureSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanSummary {
    pub n_ok: usize,
    pub n_skipped: usize,
    pub min_k: f64,
    pub max_k: f64,
    pub argmin: PhasePoint,
    pub argmax: PhasePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

fn evaluate(params: &MetricParams, point: PhasePoint, band: f64) -> CurvatureSample {
    if point.x.abs() < band {
        return CurvatureSample::skipped(
            point,
            SampleStatus::DomainError(DomainViolation::ExcludedBand { x: point.x, band }.to_string()),
        );
    }
    flag_curvature(params, &point)
}

fn run<F>(n: usize, exec: Execution, f: F) -> Vec<ScanRow>
where
    F: Fn(usize) -> ScanRow + Sync + Send,
{
    // collect() keeps index order in both modes
    match exec {
        Execution::Serial => (0..n).map(f).collect(),
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}

pub fn grid_scan(spec: &GridSpec) -> Result<(Vec<ScanRow>, ScanSummary)> {
    grid_scan_with(spec, Execution::Parallel)
}

/// Row-major over `(x, φ)`: row `i` holds `x_i`, column `j` holds `φ_j`.
pub fn grid_scan_with(spec: &GridSpec, exec: Execution) -> Result<(Vec<ScanRow>, ScanSummary)> {
    spec.validate()?;
    let params = spec.params();
    params.validate()?;
    let rows = run(spec.nx * spec.nphi, exec, |idx| {
        let (i, j) = (idx / spec.nphi, idx % spec.nphi);
        let phi = spec.phi_at(j);
        let (s, c) = phi.sin_cos();
        let point = PhasePoint::new(spec.x_at(i), 0.0, s, c);
        ScanRow {
            phi: Some(phi),
            sample: evaluate(&params, point, spec.exclude_band),
        }
    });
    let summary = summarize(&rows).ok_or(Error::EmptyResult)?;
    Ok((rows, summary))
}

pub fn slice_scan(spec: &SliceSpec) -> Result<Vec<ScanRow>> {
    slice_scan_with(spec, Execution::Parallel)
}

/// Evaluates `K` at `(x, 0, 0, x)` on `n ≥ 2` equally spaced `x`.
pub fn slice_scan_with(spec: &SliceSpec, exec: Execution) -> Result<Vec<ScanRow>> {
    if spec.n < 2 {
        return Err(Error::Argument(format!("slice needs n >= 2, got {}", spec.n)));
    }
    if !spec.x_min.is_finite() || !spec.x_max.is_finite() || spec.x_min > spec.x_max {
        return Err(Error::Argument(format!(
            "bad slice range [{}, {}]",
            spec.x_min, spec.x_max
        )));
    }
    let params = MetricParams::new(spec.a, spec.c);
    params.validate()?;
    Ok(run(spec.n, exec, |i| {
        let x = lattice(spec.x_min, spec.x_max, spec.n, i);
        ScanRow {
            phi: None,
            sample: evaluate(&params, PhasePoint::new(x, 0.0, 0.0, x), spec.exclude_band),
        }
    }))
}

/// Extremes over the ok rows; `None` when there are none. Ties keep the
/// earliest row.
pub fn summarize(rows: &[ScanRow]) -> Option<ScanSummary> {
    let mut summary: Option<ScanSummary> = None;
    let mut skipped = 0;
    for row in rows {
        let Some(k) = row.sample.k else {
            skipped += 1;
            continue;
        };
        let point = row.sample.point;
        match summary.as_mut() {
            None => {
                summary = Some(ScanSummary {
                    n_ok: 1,
                    n_skipped: 0,
                    min_k: k,
                    max_k: k,
                    argmin: point,
                    argmax: point,
                })
            }
            Some(s) => {
                s.n_ok += 1;
                if k < s.min_k {
                    s.min_k = k;
                    s.argmin = point;
                }
                if k > s.max_k {
                    s.max_k = k;
                    s.argmax = point;
                }
            }
        }
    }
    summary.map(|mut s| {
        s.n_skipped = skipped;
        s
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Destination {
    Stdout,
    File(PathBuf),
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn render_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("x,phi,r,t,K,status\n");
    for row in rows {
        let p = row.sample.point;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(p.x),
            opt(row.phi),
            fmt_f64(p.r),
            fmt_f64(p.t),
            opt(row.sample.k),
            row.sample.status.code()
        );
    }
    out
}

/// JSON with every float written to 17 significant digits.
pub fn render_json(value: &Value) -> String {
    let mut out = String::new();
    write_json(&mut out, value);
    out.push('\n');
    out
}

fn write_json(out: &mut String, value: &Value) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.is_f64(), n.as_f64()) {
            (true, Some(v)) => out.push_str(&fmt_f64(v)),
            _ => out.push_str(&n.to_string()),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_json(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_json(out, v);
            }
            out.push('}');
        }
    }
}

/// Builds the `{spec, summary, samples?}` document.
pub fn json_document<S: Serialize>(spec: &S, summary: Option<&ScanSummary>, rows: Option<&[ScanRow]>) -> Value {
    let mut doc = serde_json::Map::new();
    doc.insert("spec".into(), serde_json::to_value(spec).expect("spec serializes"));
    doc.insert(
        "summary".into(),
        serde_json::to_value(summary).expect("summary serializes"),
    );
    if let Some(rows) = rows {
        doc.insert("samples".into(), serde_json::to_value(rows).expect("rows serialize"));
    }
    Value::Object(doc)
}

pub fn write_output(text: &str, destination: &Destination) -> Result<()> {
    match destination {
        Destination::Stdout => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
        Destination::File(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        }),
    }
}

/// Writes rows as CSV, or as a JSON document (rows included only when
/// `include_samples` is set).
pub fn emit<S: Serialize>(
    rows: &[ScanRow],
    summary: Option<&ScanSummary>,
    spec: &S,
    format: Format,
    include_samples: bool,
    destination: &Destination,
) -> Result<()> {
    let text = match format {
        Format::Csv => render_csv(rows),
        Format::Json => render_json(&json_document(spec, summary, include_samples.then_some(rows))),
    };
    write_output(&text, destination)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_1x1() -> GridSpec {
        GridSpec {
            x_min: 0.8,
            x_max: 0.8,
            nx: 1,
            phi_min: 0.3,
            phi_max: 0.3,
            nphi: 1,
            c: 2.0,
            a: 1.0,
            exclude_band: DEFAULT_EXCLUDE_BAND,
        }
    }

    #[test]
    fn lattice_includes_endpoints() {
        assert_eq!(lattice(-1.0, 1.0, 5, 0), -1.0);
        assert_eq!(lattice(-1.0, 1.0, 5, 2), 0.0);
        assert_eq!(lattice(-1.0, 1.0, 5, 4), 1.0);
        assert_eq!(lattice(2.0, 3.0, 1, 0), 2.0);
    }

    #[test]
    fn single_point_grid() {
        let (rows, summary) = grid_scan(&spec_1x1()).unwrap();
        assert_eq!(rows.len(), 1);
        let k = rows[0].sample.k.unwrap();
        assert_eq!(summary.min_k, k);
        assert_eq!(summary.max_k, k);
        assert_eq!(summary.n_ok, 1);
        assert_eq!(summary.n_skipped, 0);
    }

    #[test]
    fn grid_inside_band_is_empty() {
        let spec = GridSpec {
            x_min: -5e-4,
            x_max: 5e-4,
            nx: 4,
            nphi: 3,
            phi_max: 1.0,
            ..spec_1x1()
        };
        assert!(matches!(grid_scan(&spec), Err(Error::EmptyResult)));
    }

    #[test]
    fn bad_specs_are_argument_errors() {
        let spec = GridSpec { nx: 0, ..spec_1x1() };
        assert!(matches!(grid_scan(&spec), Err(Error::Argument(_))));
        let slice = SliceSpec {
            x_min: -1.0,
            x_max: 1.0,
            n: 1,
            c: 2.0,
            a: 1.0,
            exclude_band: DEFAULT_EXCLUDE_BAND,
        };
        assert!(matches!(slice_scan(&slice), Err(Error::Argument(_))));
    }

    #[test]
    fn csv_shape() {
        let (rows, _) = grid_scan(&spec_1x1()).unwrap();
        let csv = render_csv(&rows);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "x,phi,r,t,K,status");
        assert!(lines[1].ends_with(",ok"));
        assert_eq!(lines[1].split(',').count(), 6);
    }

    #[test]
    fn slice_rows_leave_phi_empty() {
        let slice = SliceSpec {
            x_min: -1.0,
            x_max: 1.0,
            n: 3,
            c: 2.0,
            a: 1.0,
            exclude_band: DEFAULT_EXCLUDE_BAND,
        };
        let rows = slice_scan(&slice).unwrap();
        // middle node is x = 0, inside the band
        assert_eq!(rows[1].sample.status.code(), "domain_error");
        let csv = render_csv(&rows);
        let row: Vec<_> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[1], "");
        let skipped: Vec<_> = csv.lines().nth(2).unwrap().split(',').collect();
        assert_eq!(skipped[4], "");
    }

    #[test]
    fn summary_only_json_has_no_samples() {
        let spec = spec_1x1();
        let (rows, summary) = grid_scan(&spec).unwrap();
        let doc = json_document(&spec, Some(&summary), None);
        assert!(doc.get("samples").is_none());
        let text = render_json(&doc);
        let parsed: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["summary"]["n_ok"], 1);
        let with = render_json(&json_document(&spec, Some(&summary), Some(&rows)));
        let parsed: Value = serde_json::from_str(&with).unwrap();
        assert_eq!(parsed["samples"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(fmt_f64(1.55), "1.5500000000000000e0");
        let doc = serde_json::json!({"k": 0.1, "n": 3});
        assert_eq!(render_json(&doc), "{\"k\":1.0000000000000001e-1,\"n\":3}\n");
    }
}
