//! The training dataset: JSON lines, a header line with the schema version
//! and feature order, then one record per (benchmark, configuration) run.
//!
//! ```text
//! {"schema_version":1,"feature_order":["for_count",...]}
//! {"benchmark_id":"b1","task":"cover-error","features":{...},"flags":"strategy=...","verdict":"unknown","coverage_score":null,"elapsed_seconds":300.0,"time_limit_seconds":300.0,"class":5,"note":null}
//! ```
//!
//! An empty dataset is an empty file.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use flagsel_core::label::OutcomeError;
use flagsel_core::{classify, ClassLabel, FeatureVector, FlagConfiguration, RunOutcome, TaskType, Verdict, FEATURE_NAMES};

use crate::{Error, Result};

pub const DATASET_SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub schema_version: u64,
    pub feature_order: Vec<String>,
}

impl Header {
    pub fn current() -> Self {
        Header { schema_version: DATASET_SCHEMA_VERSION, feature_order: FEATURE_NAMES.iter().map(|s| s.to_string()).collect() }
    }
}

/// One labelled backend run. Cover-error records carry `verdict`,
/// cover-branches records carry `coverage_score`; the other is null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub benchmark_id: String,
    pub task: TaskType,
    pub features: FeatureVector,
    pub flags: FlagConfiguration,
    pub verdict: Option<Verdict>,
    pub coverage_score: Option<f64>,
    pub elapsed_seconds: f64,
    pub time_limit_seconds: f64,
    pub class: ClassLabel,
    pub note: Option<String>,
}

impl DatasetRecord {
    pub fn new(
        benchmark_id: &str,
        features: FeatureVector,
        flags: FlagConfiguration,
        outcome: &RunOutcome,
        note: Option<String>,
    ) -> Self {
        DatasetRecord {
            benchmark_id: benchmark_id.to_string(),
            task: outcome.task(),
            features,
            flags,
            verdict: outcome.verdict(),
            coverage_score: outcome.coverage(),
            elapsed_seconds: outcome.elapsed_seconds(),
            time_limit_seconds: outcome.time_limit_seconds(),
            class: classify(outcome),
            note,
        }
    }

    /// Rebuild the run outcome from the stored fields.
    pub fn outcome(&self) -> Result<RunOutcome, OutcomeError> {
        match (self.task, self.verdict, self.coverage_score) {
            (TaskType::CoverError, Some(v), None) => RunOutcome::cover_error(v, self.elapsed_seconds, self.time_limit_seconds),
            (TaskType::CoverBranches, None, Some(c)) => {
                RunOutcome::cover_branches(c, self.elapsed_seconds, self.time_limit_seconds)
            }
            _ => Err(OutcomeError::UnknownTask),
        }
    }
}

/// A record whose stored class disagrees with its stored outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditFinding {
    /// 0-based record position.
    pub index: usize,
    pub stored: ClassLabel,
    /// `None` when the outcome fields are themselves inconsistent.
    pub recomputed: Option<ClassLabel>,
}

/// Recompute every record's class from its outcome fields.
pub fn audit(records: &[DatasetRecord]) -> Vec<AuditFinding> {
    records
        .iter()
        .enumerate()
        .filter_map(|(index, r)| {
            let recomputed = r.outcome().ok().map(|o| classify(&o));
            (recomputed != Some(r.class)).then_some(AuditFinding { index, stored: r.class, recomputed })
        })
        .collect()
}

pub fn write_dataset_to<W: Write>(out: W, records: &[DatasetRecord]) -> Result<()> {
    let internal = |e: &dyn std::fmt::Display| Error::Internal(e.to_string());
    let mut w = BufWriter::new(out);
    if !records.is_empty() {
        serde_json::to_writer(&mut w, &Header::current()).map_err(|e| internal(&e))?;
        w.write_all(b"\n").map_err(|e| internal(&e))?;
    }
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| internal(&e))?;
        w.write_all(b"\n").map_err(|e| internal(&e))?;
    }
    w.flush().map_err(|e| internal(&e))
}

pub fn write_dataset(path: &Path, records: &[DatasetRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset_to(file, records).map_err(|e| match e {
        Error::Internal(m) => Error::Input(format!("{}: {m}", path.display())),
        e => e,
    })
}

pub fn read_dataset_from<R: Read>(input: R) -> Result<Vec<DatasetRecord>> {
    let reader = BufReader::new(input);
    let mut records = Vec::new();
    let mut header_seen = false;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::DatasetLine { line: line_no, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |e: serde_json::Error| Error::DatasetLine { line: line_no, message: e.to_string() };
        if !header_seen {
            check_header(&line, line_no)?;
            header_seen = true;
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(malformed)?);
    }
    Ok(records)
}

fn check_header(line: &str, line_no: usize) -> Result<()> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| Error::DatasetLine { line: line_no, message: e.to_string() })?;
    let found = value.get("schema_version").and_then(serde_json::Value::as_u64).ok_or_else(|| Error::DatasetLine {
        line: line_no,
        message: "first line must be a header with `schema_version`".into(),
    })?;
    if found != DATASET_SCHEMA_VERSION {
        return Err(Error::SchemaVersion { what: "dataset", found, expected: DATASET_SCHEMA_VERSION });
    }
    let header: Header =
        serde_json::from_value(value).map_err(|e| Error::DatasetLine { line: line_no, message: e.to_string() })?;
    if header.feature_order != Header::current().feature_order {
        return Err(Error::DatasetLine { line: line_no, message: "feature order differs from this extractor".into() });
    }
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_from(file)
}
