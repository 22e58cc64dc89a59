use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Map, Value};

use crate::args::Format;

/// Columns of `f64` with a header row.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> Value {
        json!({ "columns": self.columns, "rows": self.rows })
    }

    /// Polylines of every column against the first, each in its own band.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const BAND: f64 = 120.0;
        let bands = self.columns.len().saturating_sub(1).max(1);
        let xs: Vec<f64> = self.rows.iter().map(|r| r[0]).collect();
        let (x0, x1) = bounds(&xs);
        let mut out = String::new();
        let height = BAND * bands as f64;
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" viewBox="0 0 {W} {height}">"#
        );
        for (k, name) in self.columns.iter().enumerate().skip(1) {
            let top = BAND * (k - 1) as f64;
            let ys: Vec<f64> = self.rows.iter().map(|r| r[k]).collect();
            let (y0, y1) = bounds(&ys);
            let _ = writeln!(
                out,
                r#"<text x="4" y="{}" font-size="11" font-family="monospace">{name} ∈ [{y0:.4e}, {y1:.4e}]</text>"#,
                top + 12.0
            );
            let mut segment = Vec::new();
            let flush = |segment: &mut Vec<String>, out: &mut String| {
                if segment.len() > 1 {
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="black" stroke-width="1" points="{}"/>"#,
                        segment.join(" ")
                    );
                }
                segment.clear();
            };
            for (x, y) in xs.iter().zip(&ys) {
                if !(x.is_finite() && y.is_finite()) {
                    flush(&mut segment, &mut out);
                    continue;
                }
                let px = 4.0 + (W - 8.0) * scale(*x, x0, x1);
                let py = top + BAND - 6.0 - (BAND - 24.0) * scale(*y, y0, y1);
                segment.push(format!("{px:.2},{py:.2}"));
            }
            flush(&mut segment, &mut out);
        }
        out.push_str("</svg>\n");
        out
    }
}

fn bounds(v: &[f64]) -> (f64, f64) {
    v.iter()
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        })
}

fn scale(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}

/// Everything a command produces. Nothing is written until the command has
/// finished.
#[derive(Debug)]
pub struct Artifact {
    pub name: String,
    pub summary: Map<String, Value>,
    pub table: Option<Table>,
    /// Hypothesis violations: reported, not errors.
    pub findings: Vec<String>,
}

impl Artifact {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            summary: Map::new(),
            table: None,
            findings: vec![],
        }
    }

    pub fn set(&mut self, key: &str, value: impl serde::Serialize) -> Result<()> {
        self.summary
            .insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn finding(&mut self, message: impl Into<String>) {
        self.findings.push(message.into());
    }

    fn summary_value(&self) -> Value {
        let mut s = self.summary.clone();
        s.insert("findings".into(), json!(self.findings));
        Value::Object(s)
    }
}

/// Creates `dir` if needed and refuses read-only targets.
pub fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let meta = fs::metadata(dir).with_context(|| format!("cannot inspect {}", dir.display()))?;
    if !meta.is_dir() {
        bail!("{} is not a directory", dir.display());
    }
    if meta.permissions().readonly() {
        bail!("output directory {} is read-only", dir.display());
    }
    Ok(())
}

/// Writes the artifact and returns the paths written.
pub fn write(a: &Artifact, dir: &Path, format: Format, svg: bool) -> Result<Vec<PathBuf>> {
    let mut written = vec![];
    let mut put = |file: String, body: String| -> Result<()> {
        let path = dir.join(file);
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
        Ok(())
    };
    let mut doc = a.summary_value();
    match (&a.table, format) {
        (Some(t), Format::Json) => {
            doc["table"] = t.to_json();
        }
        (Some(t), Format::Csv) => put(format!("{}.csv", a.name), t.to_csv())?,
        (None, _) => {}
    }
    put(format!("{}.json", a.name), pretty(&doc))?;
    if let (true, Some(t)) = (svg, &a.table) {
        put(format!("{}.svg", a.name), t.to_svg())?;
    }
    Ok(written)
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

pub fn stdout_summary(a: &Artifact) -> String {
    pretty(&a.summary_value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![0.0, 1.0]);
        t.push(vec![0.5, f64::NAN]);
        t.push(vec![1.0, 3.0]);
        t.push(vec![2.0, 2.0]);
        t
    }

    #[test]
    fn csv_has_header_and_rows() {
        assert_eq!(sample().to_csv(), "x,y\n0,1\n0.5,NaN\n1,3\n2,2\n");
    }

    #[test]
    fn svg_breaks_lines_at_gaps() {
        let svg = sample().to_svg();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }
}
