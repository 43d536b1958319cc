//! Benchmark manifests: a JSON array of
//! `{"id", "path", "task", "time_limit_seconds"}` objects.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use flagsel_core::{FeatureVector, TaskType};

use crate::{features_of_file, read_file, Error, Result};

/// Per-run time limit used when an entry does not give one.
pub const DEFAULT_TIME_LIMIT_SECONDS: f64 = 300.0;

fn default_time_limit() -> f64 {
    DEFAULT_TIME_LIMIT_SECONDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkEntry {
    pub id: String,
    pub path: PathBuf,
    pub task: TaskType,
    #[serde(default = "default_time_limit")]
    pub time_limit_seconds: f64,
}

/// A manifest entry whose source has been read and profiled.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub entry: BenchmarkEntry,
    pub features: FeatureVector,
}

/// Parse a manifest. Relative paths are resolved against the manifest's
/// directory.
pub fn read_manifest(path: &Path) -> Result<Vec<BenchmarkEntry>> {
    let bytes = read_file(path)?;
    let mut entries: Vec<BenchmarkEntry> =
        serde_json::from_slice(&bytes).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    for e in &mut entries {
        if e.path.is_relative() {
            e.path = base.join(&e.path);
        }
    }
    Ok(entries)
}

pub fn write_manifest(path: &Path, entries: &[BenchmarkEntry]) -> Result<()> {
    let mut text = serde_json::to_string_pretty(entries).map_err(|e| Error::Internal(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Check every entry and profile its source. Any problem rejects the whole
/// manifest so that a campaign never starts on bad input.
pub fn prepare(entries: &[BenchmarkEntry], nondet_prefixes: &[&str]) -> Result<Vec<Benchmark>> {
    if entries.is_empty() {
        return Err(Error::Manifest("no benchmarks".into()));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(entries.len());
    for e in entries {
        if !seen.insert(e.id.as_str()) {
            return Err(Error::Manifest(format!("duplicate id `{}`", e.id)));
        }
        if !(e.time_limit_seconds.is_finite() && e.time_limit_seconds > 0.0) {
            return Err(Error::Manifest(format!("`{}`: time_limit_seconds must be positive", e.id)));
        }
        let features = features_of_file(&e.path, nondet_prefixes)
            .map_err(|err| Error::Manifest(format!("`{}`: {err}", e.id)))?;
        out.push(Benchmark { entry: e.clone(), features });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, path: &Path) -> BenchmarkEntry {
        BenchmarkEntry { id: id.into(), path: path.into(), task: TaskType::CoverError, time_limit_seconds: 10.0 }
    }

    #[test]
    fn rejects_bad_manifests() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("a.c");
        std::fs::write(&good, "int main(){ while(1){} }").unwrap();
        let bad = dir.path().join("b.c");
        std::fs::write(&bad, "int main(){ ").unwrap();

        assert!(prepare(&[], &[]).is_err());
        assert!(prepare(&[entry("a", &good), entry("a", &good)], &[]).is_err());
        assert!(prepare(&[entry("a", &good), entry("b", &bad)], &[]).is_err());
        assert!(prepare(&[entry("a", &dir.path().join("missing.c"))], &[]).is_err());
        let mut slow = entry("a", &good);
        slow.time_limit_seconds = 0.0;
        assert!(prepare(&[slow], &[]).is_err());

        let ok = prepare(&[entry("a", &good)], &[]).unwrap();
        assert_eq!(ok[0].features.while_infinite_count, 1);
    }

    #[test]
    fn relative_paths_and_default_limit() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.json");
        std::fs::write(&m, r#"[{"id":"x","path":"x.c","task":"cover-branches"}]"#).unwrap();
        let entries = read_manifest(&m).unwrap();
        assert_eq!(entries[0].path, dir.path().join("x.c"));
        assert_eq!(entries[0].time_limit_seconds, DEFAULT_TIME_LIMIT_SECONDS);
        assert_eq!(entries[0].task, TaskType::CoverBranches);
    }
}
