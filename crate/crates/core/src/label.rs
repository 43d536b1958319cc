//! Grading one backend run on the ordinal 0–5 scale (0 best).
//!
//! | class | cover-error (bug detected)  | cover-branches      |
//! |-------|-----------------------------|---------------------|
//! | 0     | rest_time_ratio >= 0.8      | coverage >= 0.85    |
//! | 1     | rest_time_ratio >= 0.6      | coverage >= 0.68    |
//! | 2     | rest_time_ratio >= 0.4      | coverage >= 0.51    |
//! | 3     | rest_time_ratio >= 0.2      | coverage >= 0.34    |
//! | 4     | rest_time_ratio >= 0.0      | coverage >= 0.17    |
//! | 5     | no bug detected (unknown)   | coverage >= 0.0     |
//!
//! `rest_time_ratio = (time_limit - elapsed) / time_limit`, the share of the
//! budget left when the verdict arrived. A timeout is recorded with
//! `elapsed = time_limit`.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskType {
    #[serde(rename = "cover-error")]
    CoverError,
    #[serde(rename = "cover-branches")]
    CoverBranches,
}

impl TaskType {
    pub fn name(self) -> &'static str {
        match self {
            TaskType::CoverError => "cover-error",
            TaskType::CoverBranches => "cover-branches",
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskType {
    type Err = OutcomeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cover-error" => Ok(TaskType::CoverError),
            "cover-branches" => Ok(TaskType::CoverBranches),
            _ => Err(OutcomeError::UnknownTask),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "bug-detected")]
    BugDetected,
    #[serde(rename = "unknown")]
    Unknown,
}

/// Ordinal quality class; lower is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ClassLabel(u8);

pub const NUM_CLASSES: usize = 6;

impl ClassLabel {
    pub const BEST: ClassLabel = ClassLabel(0);
    pub const WORST: ClassLabel = ClassLabel(5);

    pub fn new(value: u8) -> Option<Self> {
        ((value as usize) < NUM_CLASSES).then_some(ClassLabel(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u8> for ClassLabel {
    type Error = OutcomeError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        ClassLabel::new(v).ok_or(OutcomeError::ClassOutOfRange(v))
    }
}

impl From<ClassLabel> for u8 {
    fn from(c: ClassLabel) -> u8 {
        c.0
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum OutcomeError {
    #[error("time limit must be positive and finite")]
    BadTimeLimit,
    #[error("elapsed time must be in [0, time limit]")]
    BadElapsed,
    #[error("coverage score must be in [0, 1]")]
    BadCoverage,
    #[error("unknown task type")]
    UnknownTask,
    #[error("class {0} is outside 0..=5")]
    ClassOutOfRange(u8),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Finding {
    Verdict(Verdict),
    Coverage(f64),
}

/// Result of one backend execution. The constructors enforce the
/// invariants: `0 <= elapsed <= time_limit`, `time_limit > 0`, coverage in
/// `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    finding: Finding,
    elapsed_seconds: f64,
    time_limit_seconds: f64,
}

fn check_times(elapsed: f64, limit: f64) -> Result<(), OutcomeError> {
    if !(limit.is_finite() && limit > 0.0) {
        return Err(OutcomeError::BadTimeLimit);
    }
    if !(elapsed >= 0.0 && elapsed <= limit) {
        return Err(OutcomeError::BadElapsed);
    }
    Ok(())
}

impl RunOutcome {
    pub fn cover_error(verdict: Verdict, elapsed_seconds: f64, time_limit_seconds: f64) -> Result<Self, OutcomeError> {
        check_times(elapsed_seconds, time_limit_seconds)?;
        Ok(RunOutcome { finding: Finding::Verdict(verdict), elapsed_seconds, time_limit_seconds })
    }

    pub fn cover_branches(coverage: f64, elapsed_seconds: f64, time_limit_seconds: f64) -> Result<Self, OutcomeError> {
        check_times(elapsed_seconds, time_limit_seconds)?;
        if !(0.0..=1.0).contains(&coverage) {
            return Err(OutcomeError::BadCoverage);
        }
        Ok(RunOutcome { finding: Finding::Coverage(coverage), elapsed_seconds, time_limit_seconds })
    }

    /// The outcome recorded for a run that produced nothing usable: unknown
    /// verdict or zero coverage, with the whole budget spent.
    pub fn failed(task: TaskType, time_limit_seconds: f64) -> Result<Self, OutcomeError> {
        match task {
            TaskType::CoverError => Self::cover_error(Verdict::Unknown, time_limit_seconds, time_limit_seconds),
            TaskType::CoverBranches => Self::cover_branches(0.0, time_limit_seconds, time_limit_seconds),
        }
    }

    pub fn task(&self) -> TaskType {
        match self.finding {
            Finding::Verdict(_) => TaskType::CoverError,
            Finding::Coverage(_) => TaskType::CoverBranches,
        }
    }

    pub fn finding(&self) -> Finding {
        self.finding
    }

    pub fn verdict(&self) -> Option<Verdict> {
        match self.finding {
            Finding::Verdict(v) => Some(v),
            Finding::Coverage(_) => None,
        }
    }

    pub fn coverage(&self) -> Option<f64> {
        match self.finding {
            Finding::Coverage(c) => Some(c),
            Finding::Verdict(_) => None,
        }
    }

    pub fn elapsed_seconds(&self) -> f64 {
        self.elapsed_seconds
    }

    pub fn time_limit_seconds(&self) -> f64 {
        self.time_limit_seconds
    }

    pub fn rest_time_ratio(&self) -> f64 {
        (self.time_limit_seconds - self.elapsed_seconds) / self.time_limit_seconds
    }
}

pub const REST_TIME_THRESHOLDS: [f64; 5] = [0.8, 0.6, 0.4, 0.2, 0.0];
pub const COVERAGE_THRESHOLDS: [f64; 6] = [0.85, 0.68, 0.51, 0.34, 0.17, 0.0];

/// Class of a detected bug given the remaining time share.
pub fn class_for_rest_time_ratio(ratio: f64) -> ClassLabel {
    let i = REST_TIME_THRESHOLDS.iter().position(|&t| ratio >= t).unwrap_or(5);
    ClassLabel(i as u8)
}

pub fn class_for_coverage(coverage: f64) -> ClassLabel {
    let i = COVERAGE_THRESHOLDS.iter().position(|&t| coverage >= t).unwrap_or(5);
    ClassLabel(i as u8)
}

pub fn classify(outcome: &RunOutcome) -> ClassLabel {
    match outcome.finding {
        Finding::Verdict(Verdict::BugDetected) => class_for_rest_time_ratio(outcome.rest_time_ratio()),
        Finding::Verdict(Verdict::Unknown) => ClassLabel::WORST,
        Finding::Coverage(c) => class_for_coverage(c),
    }
}
