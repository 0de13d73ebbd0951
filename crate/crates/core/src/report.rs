//! Structured reports with deterministic text and tabular emission.
//!
//! Reruns with an identical scene and seed produce byte-identical
//! output: values are printed at full precision (17 significant digits),
//! collections keep insertion order, and the provenance block carries
//! the seed, the tolerances, and the crate version.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

/// One report value.
#[derive(Debug, Clone)]
pub enum Value {
    Real(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    RealArray(Vec<f64>),
    /// Row-major matrix.
    Matrix {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
    /// A list of coordinate vectors (orbit clouds, witnesses, vertices).
    PointList(Vec<Vec<f64>>),
}

#[derive(Debug, Clone)]
pub struct Provenance {
    pub seed: u64,
    pub seed_overridden: bool,
    pub version: String,
    pub tolerances: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    pub outputs: Vec<(String, Value)>,
    pub residuals: Vec<(String, f64)>,
    pub verdicts: Vec<(String, bool)>,
    pub provenance: Provenance,
}

/// Full-precision decimal form used across all emitters.
pub fn real(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{:.16e}", x)
    }
}

impl Report {
    pub fn new(command: &str, inputs_digest: String, provenance: Provenance) -> Self {
        Self {
            command: command.to_string(),
            inputs_digest,
            outputs: Vec::new(),
            residuals: Vec::new(),
            verdicts: Vec::new(),
            provenance,
        }
    }

    pub fn push_output(&mut self, key: &str, value: Value) {
        self.outputs.push((key.to_string(), value));
    }

    pub fn push_residual(&mut self, key: &str, value: f64) {
        self.residuals.push((key.to_string(), value));
    }

    pub fn push_verdict(&mut self, key: &str, value: bool) {
        self.verdicts.push((key.to_string(), value));
    }

    pub fn any_failed_verdict(&self) -> bool {
        self.verdicts.iter().any(|(_, v)| !*v)
    }

    /// Key/value text with nested arrays of reals.
    pub fn to_structured_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command = {}", self.command);
        let _ = writeln!(out, "inputs_digest = {}", self.inputs_digest);
        let _ = writeln!(out, "provenance.version = {}", self.provenance.version);
        let _ = writeln!(out, "provenance.seed = {}", self.provenance.seed);
        let _ = writeln!(
            out,
            "provenance.seed_overridden = {}",
            self.provenance.seed_overridden
        );
        for (k, v) in &self.provenance.tolerances {
            let _ = writeln!(out, "provenance.tolerance.{k} = {}", real(*v));
        }
        for (k, v) in &self.outputs {
            match v {
                Value::Real(x) => {
                    let _ = writeln!(out, "output.{k} = {}", real(*x));
                }
                Value::Int(i) => {
                    let _ = writeln!(out, "output.{k} = {i}");
                }
                Value::Bool(b) => {
                    let _ = writeln!(out, "output.{k} = {b}");
                }
                Value::Text(t) => {
                    let _ = writeln!(out, "output.{k} = {t}");
                }
                Value::RealArray(xs) => {
                    let _ = writeln!(out, "output.{k} = [{}]", join_reals(xs));
                }
                Value::Matrix { rows, cols, data } => {
                    let _ = writeln!(out, "output.{k}.rows = {rows}");
                    let _ = writeln!(out, "output.{k}.cols = {cols}");
                    for r in 0..*rows {
                        let row = &data[r * cols..(r + 1) * cols];
                        let _ = writeln!(out, "output.{k}.row{r} = [{}]", join_reals(row));
                    }
                }
                Value::PointList(points) => {
                    let _ = writeln!(out, "output.{k}.count = {}", points.len());
                    for (i, p) in points.iter().enumerate() {
                        let _ = writeln!(out, "output.{k}.{i} = [{}]", join_reals(p));
                    }
                }
            }
        }
        for (k, v) in &self.residuals {
            let _ = writeln!(out, "residual.{k} = {}", real(*v));
        }
        for (k, v) in &self.verdicts {
            let _ = writeln!(out, "verdict.{k} = {v}");
        }
        out
    }

    /// Flat tabular form: one row per scalar and one row per sample point
    /// of every point list.
    pub fn to_csv(&self) -> String {
        let mut width = 1;
        for (_, v) in &self.outputs {
            match v {
                Value::RealArray(xs) => width = width.max(xs.len()),
                Value::PointList(points) => {
                    for p in points {
                        width = width.max(p.len());
                    }
                }
                Value::Matrix { cols, .. } => width = width.max(*cols),
                _ => {}
            }
        }
        let mut out = String::new();
        let _ = write!(out, "kind,key,index");
        for c in 0..width {
            let _ = write!(out, ",c{c}");
        }
        out.push('\n');
        let mut row = |kind: &str, key: &str, index: String, values: &[String]| {
            let mut line = format!("{kind},{key},{index}");
            for c in 0..width {
                line.push(',');
                if let Some(v) = values.get(c) {
                    line.push_str(v);
                }
            }
            line.push('\n');
            out.push_str(&line);
        };
        row(
            "meta",
            "command",
            String::new(),
            &[self.command.clone()],
        );
        row(
            "meta",
            "inputs_digest",
            String::new(),
            &[self.inputs_digest.clone()],
        );
        row(
            "meta",
            "seed",
            String::new(),
            &[self.provenance.seed.to_string()],
        );
        for (k, v) in &self.outputs {
            match v {
                Value::Real(x) => row("output", k, String::new(), &[real(*x)]),
                Value::Int(i) => row("output", k, String::new(), &[i.to_string()]),
                Value::Bool(b) => row("output", k, String::new(), &[b.to_string()]),
                Value::Text(t) => row("output", k, String::new(), &[t.clone()]),
                Value::RealArray(xs) => {
                    let cells: Vec<String> = xs.iter().map(|x| real(*x)).collect();
                    row("output", k, String::new(), &cells);
                }
                Value::Matrix { rows, cols, data } => {
                    for r in 0..*rows {
                        let cells: Vec<String> = data[r * cols..(r + 1) * cols]
                            .iter()
                            .map(|x| real(*x))
                            .collect();
                        row("output", k, r.to_string(), &cells);
                    }
                }
                Value::PointList(points) => {
                    for (i, p) in points.iter().enumerate() {
                        let cells: Vec<String> = p.iter().map(|x| real(*x)).collect();
                        row("output", k, i.to_string(), &cells);
                    }
                }
            }
        }
        for (k, v) in &self.residuals {
            row("residual", k, String::new(), &[real(*v)]);
        }
        for (k, v) in &self.verdicts {
            row("verdict", k, String::new(), &[v.to_string()]);
        }
        out
    }

    pub fn emit(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::StructuredText => self.to_structured_text(),
            ReportFormat::Csv => self.to_csv(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    StructuredText,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = crate::CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "structured-text" | "text" => Ok(Self::StructuredText),
            "comma-separated-values" | "csv" => Ok(Self::Csv),
            other => Err(crate::CoreError::ValidationError(format!(
                "unknown report format `{other}`"
            ))),
        }
    }
}

fn join_reals(xs: &[f64]) -> String {
    xs.iter().map(|x| real(*x)).collect::<Vec<_>>().join(", ")
}

/// Hex digest binding a report to its scene text and invocation.
pub fn inputs_digest(scene_text: &str, command: &str, args_canonical: &str, seed: u64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(scene_text.as_bytes());
    hasher.update([0]);
    hasher.update(command.as_bytes());
    hasher.update([0]);
    hasher.update(args_canonical.as_bytes());
    hasher.update([0]);
    hasher.update(seed.to_le_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> Report {
        let mut r = Report::new(
            "dist",
            inputs_digest("scene", "dist", "x=1,1,1", 7),
            Provenance {
                seed: 7,
                seed_overridden: false,
                version: "0.1.0".into(),
                tolerances: vec![("boundary_tolerance".into(), 1e-10)],
            },
        );
        r.push_output("value", Value::Real(std::f64::consts::LN_2));
        r.push_output(
            "witnesses",
            Value::PointList(vec![vec![1.0, 0.5], vec![0.25, 0.75]]),
        );
        r.push_residual("chord", 1e-12);
        r.push_verdict("ok", true);
        r
    }

    #[test]
    fn structured_text_is_deterministic() {
        let a = sample_report().to_structured_text();
        let b = sample_report().to_structured_text();
        assert_eq!(a, b);
        let expected = format!("output.value = {:.16e}", std::f64::consts::LN_2);
        assert!(a.contains(&expected), "{a}");
    }

    #[test]
    fn csv_has_per_sample_rows() {
        let csv = sample_report().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("kind,key,index"));
        assert!(csv.contains("output,witnesses,0,"));
        assert!(csv.contains("output,witnesses,1,"));
    }

    #[test]
    fn digest_changes_with_inputs() {
        let a = inputs_digest("scene", "dist", "x", 7);
        let b = inputs_digest("scene", "dist", "x", 8);
        let c = inputs_digest("scene", "dist", "y", 7);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }
}
