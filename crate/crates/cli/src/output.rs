//! Deterministic output writers: CSV in full-precision scientific notation
//! with units in the headers, and JSON summaries that embed the resolved
//! configuration and tag every number with its provenance.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::Resolved;

pub fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

/// One reported number with its analytic counterpart, when one exists.
#[derive(Debug, Clone, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub unit: &'static str,
    /// simulated | analytic | fitted
    pub source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_err: Option<f64>,
}

impl Metric {
    pub fn plain(name: &str, value: f64, unit: &'static str, source: &'static str) -> Metric {
        Metric { name: name.into(), value, unit, source, analytic_value: None, rel_err: None }
    }

    pub fn with_analytic(
        name: &str,
        value: f64,
        analytic: f64,
        unit: &'static str,
        source: &'static str,
    ) -> Metric {
        let rel = if analytic != 0.0 { (value - analytic) / analytic } else { value - analytic };
        Metric {
            name: name.into(),
            value,
            unit,
            source,
            analytic_value: Some(analytic),
            rel_err: Some(rel),
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    scenario: &'static str,
    config: &'a Resolved,
    metrics: &'a [Metric],
}

pub fn write_summary(dir: &Path, resolved: &Resolved, metrics: &[Metric]) -> std::io::Result<()> {
    let summary = Summary {
        schema_version: resolved.schema_version,
        scenario: resolved.scenario,
        config: resolved,
        metrics,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("serializable summary");
    text.push('\n');
    fs::write(dir.join("summary.json"), text)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    fs::write(dir.join(name), text)
}

/// Write a CSV table; `columns` are "name [unit]" headers.
pub fn write_csv(
    dir: &Path,
    name: &str,
    columns: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> std::io::Result<()> {
    let mut f = fs::File::create(dir.join(name))?;
    writeln!(f, "{}", columns.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| fmt(*v)).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    Ok(())
}
