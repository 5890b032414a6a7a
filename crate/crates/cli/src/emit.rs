//! Result tables: CSV with fixed-precision numbers, or a JSON document that
//! also carries the run metadata and every deployment.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use crate::run::ResultRow;
use crate::spec::{ExperimentSpec, Sweep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    /// JSON with metadata and full-precision values.
    Structured,
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" | "structured" => Ok(Format::Structured),
            other => bail!("unknown format {other:?}; expected csv or json"),
        }
    }
}

impl Format {
    /// `.json` selects the structured format, anything else CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Structured,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub command: String,
    pub sweep: Option<Sweep>,
    pub trials: usize,
    pub seed: u64,
    pub kappa: f64,
    pub budget: Option<f64>,
    pub version: String,
}

impl Metadata {
    pub fn of(spec: &ExperimentSpec) -> Self {
        Self {
            command: spec.command.to_string(),
            sweep: spec.sweep.clone(),
            trials: spec.trials,
            seed: spec.seed,
            kappa: spec.kappa,
            budget: spec.budget,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metadata: Metadata,
    pub rows: Vec<ResultRow>,
}

pub const CSV_HEADER: [&str; 14] = [
    "axis",
    "axis_value",
    "trial",
    "seed",
    "scheme",
    "feasible",
    "cost",
    "worst_snr_db",
    "ma_per_area",
    "sites",
    "elements",
    "m_max",
    "wall_ms",
    "status",
];

fn fixed(v: Option<f64>, digits: usize) -> String {
    v.map(|v| format!("{v:.digits$}")).unwrap_or_default()
}

fn csv_record(r: &ResultRow) -> [String; 14] {
    [
        r.axis.map(|a| a.name().to_string()).unwrap_or_default(),
        fixed(r.axis_value, 4),
        r.trial.to_string(),
        r.seed.to_string(),
        r.scheme.clone(),
        r.feasible.to_string(),
        fixed(r.cost, 2),
        fixed(r.worst_snr_db, 2),
        fixed(Some(r.ma_per_area), 2),
        r.sites.to_string(),
        r.elements.to_string(),
        r.m_max.to_string(),
        fixed(r.wall_ms, 1),
        r.status.clone(),
    ]
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(csv_record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_structured<W: Write>(report: &Report, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    writeln!(out)?;
    Ok(())
}

/// Renders `rows` in `format`.
pub fn render(rows: &[ResultRow], metadata: &Metadata, format: Format) -> Result<Vec<u8>> {
    ensure!(!rows.is_empty(), "nothing to emit");
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_csv(rows, &mut buf)?,
        Format::Structured => write_structured(
            &Report {
                metadata: metadata.clone(),
                rows: rows.to_vec(),
            },
            &mut buf,
        )?,
    }
    Ok(buf)
}

pub fn emit(rows: &[ResultRow], metadata: &Metadata, path: &Path, format: Format) -> Result<()> {
    let bytes = render(rows, metadata, format)?;
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn parse_structured(text: &str) -> Result<Report> {
    serde_json::from_str(text).context("parsing a structured report")
}
