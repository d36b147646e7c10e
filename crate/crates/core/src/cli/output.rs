//! CSV and JSON result files.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, ScanSpec};
use super::scan::PointResult;
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::sweeper::SweepSchedule;

/// 15 significant digits; empty for a missing value.
pub fn format_number(x: Option<f64>) -> String {
    match x {
        Some(x) if x.is_finite() => format!("{x:.14e}"),
        Some(x) => x.to_string(),
        None => String::new(),
    }
}

/// Column names of the CSV table for `config`.
pub fn csv_header(config: &RunConfig) -> Vec<String> {
    let mut cols: Vec<String> = ["point", "n_sites", "h", "j", "v", "gamma"]
        .map(String::from)
        .to_vec();
    for o in &config.observables {
        cols.push(format!("{}_re", o.label()));
        cols.push(format!("{}_im", o.label()));
    }
    cols.extend(["residual", "sweeps", "status", "error"].map(String::from));
    if config.verify {
        for o in &config.observables {
            cols.push(format!("oracle_{}_re", o.label()));
            cols.push(format!("oracle_{}_im", o.label()));
        }
        cols.push("verify_max_abs_error".into());
    }
    cols
}

/// One CSV record. Verification columns come last so that the remaining
/// columns do not depend on `--verify`.
pub fn csv_record(config: &RunConfig, row: &PointResult) -> Vec<String> {
    let m = &row.model;
    let mut rec = vec![
        row.index.to_string(),
        m.n_sites.to_string(),
        format_number(Some(m.field_h)),
        format_number(Some(m.coupling_j)),
        format_number(Some(m.coupling_v)),
        format_number(Some(m.gamma)),
    ];
    for i in 0..config.observables.len() {
        let v = row.observables.get(i);
        rec.push(format_number(v.map(|v| v.re)));
        rec.push(format_number(v.map(|v| v.im)));
    }
    rec.push(format_number(row.residual));
    rec.push(row.sweeps.to_string());
    rec.push(row.status.clone());
    rec.push(row.error.clone().unwrap_or_default());
    if config.verify {
        let ver = row.verification.as_ref();
        for i in 0..config.observables.len() {
            let v = ver.and_then(|v| v.oracle.get(i));
            rec.push(format_number(v.map(|v| v.re)));
            rec.push(format_number(v.map(|v| v.im)));
        }
        rec.push(format_number(ver.and_then(|v| v.max_abs_error)));
    }
    rec
}

/// CSV file written row by row and flushed after each one.
pub struct CsvSink {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvSink {
    pub fn create(path: &Path, config: &RunConfig) -> Result<Self> {
        let err = |e: csv::Error| Error::io(path, e.into());
        let mut writer = csv::Writer::from_path(path).map_err(err)?;
        writer.write_record(csv_header(config)).map_err(err)?;
        writer.flush().map_err(|e| Error::io(path, e))?;
        Ok(CsvSink {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn append(&mut self, config: &RunConfig, row: &PointResult) -> Result<()> {
        self.writer
            .write_record(csv_record(config, row))
            .map_err(|e| Error::io(&self.path, e.into()))?;
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// The configuration as recorded next to the results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub model: ModelSpec,
    pub schedule: SweepSchedule,
    pub scan: Option<ScanSpec>,
    pub observables: Vec<String>,
    pub verify: bool,
    pub warm_start: bool,
}

impl From<&RunConfig> for ConfigRecord {
    fn from(c: &RunConfig) -> Self {
        ConfigRecord {
            model: c.model,
            schedule: c.schedule.clone(),
            scan: c.scan,
            observables: c.observables.iter().map(|o| o.to_string()).collect(),
            verify: c.verify,
            warm_start: c.warm_start,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub config: ConfigRecord,
    pub points: Vec<PointResult>,
}

/// Writes the JSON document atomically. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_json(path: &Path, doc: &ResultsDocument) -> Result<()> {
    let text = serde_json::to_string_pretty(doc).map_err(|e| Error::Format(e.to_string()))?;
    let tmp = path.with_extension("json.tmp");
    let write = || -> std::io::Result<()> {
        let mut f = File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.write_all(b"\n")?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn read_json(path: &Path) -> Result<ResultsDocument> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
