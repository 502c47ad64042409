//! Run records on disk: CSV with a fixed header, or JSON with a run manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Method, OptimizerConfig};
use crate::error::{Error, Result};
use crate::optimizer::RunRecord;

pub const CSV_HEADER: [&str; 6] = ["iteration", "cum_evals", "batch_size", "fval", "optgap", "grad_est_norm"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    Csv,
    Json,
}

impl RecordFormat {
    pub fn extension(self) -> &'static str {
        match self {
            RecordFormat::Csv => "csv",
            RecordFormat::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub problem: String,
    pub method: Method,
    #[serde(rename = "N")]
    pub num_directions: usize,
    pub nu: f64,
    pub alpha: f64,
    pub theta: f64,
    pub seed: u64,
    pub budget: u64,
    pub version: String,
}

impl RunManifest {
    pub fn new(problem: impl Into<String>, cfg: &OptimizerConfig) -> Self {
        Self {
            problem: problem.into(),
            method: cfg.estimator.method,
            num_directions: cfg.estimator.num_directions,
            nu: cfg.estimator.radius,
            alpha: cfg.step_size,
            theta: cfg.sampler.theta,
            seed: cfg.seed,
            budget: cfg.budget_evaluations,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub manifest: RunManifest,
    pub records: Vec<RunRecord>,
}

/// 17 significant digits.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

pub fn records_to_csv(records: &[RunRecord]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    // writing to memory cannot fail
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in records {
        w.write_record([
            r.iteration.to_string(),
            r.cum_evals.to_string(),
            r.batch_size.to_string(),
            format_real(r.fval),
            format_real(r.optgap),
            format_real(r.grad_est_norm),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn write_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    fs::write(path, records_to_csv(records)).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("{}: unexpected header", path.display()),
        });
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Parse {
                line: i + 2,
                message: format!("{}: {e}", path.display()),
            })
        })
        .collect()
}

pub fn write_json(file: &RunFile, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(file).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json(path: &Path) -> Result<RunFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes `records` in `format`; CSV files carry no manifest.
pub fn emit_records(manifest: &RunManifest, records: &[RunRecord], format: RecordFormat, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    match format {
        RecordFormat::Csv => write_csv(records, path),
        RecordFormat::Json => write_json(
            &RunFile {
                manifest: manifest.clone(),
                records: records.to_vec(),
            },
            path,
        ),
    }
}

/// Reads records from a `.json` run file or a CSV file.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        Ok(read_json(path)?.records)
    } else {
        read_csv(path)
    }
}
