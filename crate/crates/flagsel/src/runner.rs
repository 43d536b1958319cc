//! Backend runners: the deterministic mock and an external executable.
//!
//! An external backend is any program invoked as
//! `<command> [extra args...] <backend args...> <program-path>` that prints one result
//! line on standard output:
//!
//! ```text
//! verdict=bug-detected coverage=0.0 elapsed=12.5
//! ```
//!
//! `verdict` (`bug-detected` or `unknown`) is read for cover-error runs and
//! `coverage` (in `[0, 1]`) for cover-branches runs; `elapsed` is in
//! seconds. The last line that parses wins. A backend still running at the
//! time limit is killed and the run counts as a failure.

use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Duration;

use wait_timeout::ChildExt;

use flagsel_core::mock::mock_outcome;
use flagsel_core::{FeatureVector, FlagConfiguration, RunOutcome, TaskType, Verdict};

use crate::{Error, Result};

/// Everything a runner may need for one execution.
#[derive(Debug, Clone, Copy)]
pub struct RunJob<'a> {
    pub program: &'a Path,
    pub features: &'a FeatureVector,
    pub config: &'a FlagConfiguration,
    pub args: &'a [String],
    pub task: TaskType,
    pub time_limit_seconds: f64,
}

/// The outcome of one run plus a diagnostic when the run failed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub outcome: RunOutcome,
    pub note: Option<String>,
}

impl RunReport {
    fn failure(job: &RunJob, note: String) -> Self {
        let outcome = RunOutcome::failed(job.task, job.time_limit_seconds)
            .expect("time limits are validated before any run");
        RunReport { outcome, note: Some(note) }
    }
}

/// Runs one (program, configuration) pair. Failures never escape: they
/// become an unknown / zero-coverage outcome with a note.
pub trait BackendRunner: Sync {
    fn run(&self, job: &RunJob) -> RunReport;
}

/// The planted-rule mock backend. Pure and reentrant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MockRunner {
    pub seed: u64,
}

impl BackendRunner for MockRunner {
    fn run(&self, job: &RunJob) -> RunReport {
        let outcome = mock_outcome(job.features, job.config, job.task, job.time_limit_seconds, self.seed);
        RunReport { outcome, note: None }
    }
}

/// Runs an external executable in a fresh temporary directory per run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecRunner {
    pub command: String,
    pub leading_args: Vec<String>,
}

impl ExecRunner {
    /// Split a command line on whitespace: the first word is the program,
    /// the rest are passed before the backend args.
    pub fn from_command_line(cmd: &str) -> Result<Self> {
        let mut words = cmd.split_whitespace().map(String::from);
        let command = words.next().ok_or_else(|| Error::Input("empty backend command".into()))?;
        Ok(ExecRunner { command, leading_args: words.collect() })
    }

    fn execute(&self, job: &RunJob) -> std::result::Result<RunOutcome, String> {
        let workdir = tempfile::tempdir().map_err(|e| format!("cannot create working directory: {e}"))?;
        let program = std::path::absolute(job.program).map_err(|e| format!("{}: {e}", job.program.display()))?;
        let mut child = Command::new(&self.command)
            .args(&self.leading_args)
            .args(job.args)
            .arg(&program)
            .current_dir(workdir.path())
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| format!("cannot start `{}`: {e}", self.command))?;

        // drain stdout concurrently so a chatty backend cannot block on a full pipe
        let mut stdout = child.stdout.take().expect("stdout is piped");
        let reader = std::thread::spawn(move || {
            let mut s = String::new();
            stdout.read_to_string(&mut s).map(|_| s)
        });
        let limit = Duration::from_secs_f64(job.time_limit_seconds);
        let status = match child.wait_timeout(limit).map_err(|e| format!("wait failed: {e}"))? {
            Some(status) => status,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                // a grandchild may still hold the pipe open; leave the reader detached
                drop(reader);
                return Err(format!("killed at the {}s time limit", job.time_limit_seconds));
            }
        };
        let output = reader
            .join()
            .map_err(|_| "stdout reader panicked".to_string())?
            .map_err(|e| format!("reading stdout: {e}"))?;
        output
            .lines()
            .rev()
            .find_map(|l| parse_result_line(l, job.task, job.time_limit_seconds).ok())
            .ok_or_else(|| format!("no result line in backend output (exit status {status})"))
    }
}

impl BackendRunner for ExecRunner {
    fn run(&self, job: &RunJob) -> RunReport {
        match self.execute(job) {
            Ok(outcome) => RunReport { outcome, note: None },
            Err(note) => RunReport::failure(job, note),
        }
    }
}

/// Parse `verdict=... coverage=... elapsed=...` into an outcome for `task`.
/// An elapsed time beyond the limit is clamped to the limit.
pub fn parse_result_line(line: &str, task: TaskType, time_limit_seconds: f64) -> std::result::Result<RunOutcome, String> {
    let mut verdict = None;
    let mut coverage = None;
    let mut elapsed = None;
    for word in line.split_whitespace() {
        let (k, v) = word.split_once('=').ok_or_else(|| format!("`{word}` is not key=value"))?;
        match k {
            "verdict" => {
                verdict = Some(match v {
                    "bug-detected" => Verdict::BugDetected,
                    "unknown" => Verdict::Unknown,
                    _ => return Err(format!("unknown verdict `{v}`")),
                })
            }
            "coverage" => coverage = Some(v.parse::<f64>().map_err(|_| format!("bad coverage `{v}`"))?),
            "elapsed" => elapsed = Some(v.parse::<f64>().map_err(|_| format!("bad elapsed `{v}`"))?),
            _ => return Err(format!("unknown key `{k}`")),
        }
    }
    let elapsed = elapsed.ok_or("missing elapsed")?;
    if !(elapsed.is_finite() && elapsed >= 0.0) {
        return Err(format!("bad elapsed `{elapsed}`"));
    }
    let elapsed = elapsed.min(time_limit_seconds);
    let outcome = match task {
        TaskType::CoverError => RunOutcome::cover_error(verdict.ok_or("missing verdict")?, elapsed, time_limit_seconds),
        TaskType::CoverBranches => {
            RunOutcome::cover_branches(coverage.ok_or("missing coverage")?, elapsed, time_limit_seconds)
        }
    };
    outcome.map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_result_lines() {
        let o = parse_result_line("verdict=bug-detected coverage=0 elapsed=30", TaskType::CoverError, 300.0).unwrap();
        assert_eq!(o.verdict(), Some(Verdict::BugDetected));
        assert_eq!(o.elapsed_seconds(), 30.0);
        let o = parse_result_line("verdict=unknown coverage=0.5 elapsed=400", TaskType::CoverBranches, 300.0).unwrap();
        assert_eq!(o.coverage(), Some(0.5));
        assert_eq!(o.elapsed_seconds(), 300.0);
        assert!(parse_result_line("coverage=2 elapsed=1", TaskType::CoverBranches, 300.0).is_err());
        assert!(parse_result_line("coverage=0.5", TaskType::CoverBranches, 300.0).is_err());
        assert!(parse_result_line("hello world", TaskType::CoverError, 300.0).is_err());
        assert!(parse_result_line("elapsed=3", TaskType::CoverError, 300.0).is_err());
    }
}
