//! Deterministic stand-in for the verification backend.
//!
//! The mock turns `(features, config, seed)` into a run outcome through a
//! planted rule, so the best configuration of any program can be found by
//! evaluating all configurations. The rule:
//!
//! ```text
//! difficulty = min(1, 0.2*loops + 0.1*ifs + 0.15*nondet_calls + 0.1*deepest)
//! cost       = 0.1 + difficulty * (0.1 + 1.2*mismatch + 0.04*noise)
//! ```
//!
//! `loops` is the number of for/while/do loops, `deepest` the largest of the
//! four `*_max_depth` features and `noise` a value in `[-1, 1)` hashed from
//! the seed, the features and the configuration. `mismatch` is a weighted
//! sum (weights add up to 1) of per-knob penalties in `[0, 1]`:
//!
//! | weight | knob     | prefers                                                   |
//! |--------|----------|-----------------------------------------------------------|
//! | 0.20   | strategy | k-induction if loop-heavy, else incremental               |
//! | 0.20   | unwind   | unlimited if loop-heavy, else bounded                     |
//! | 0.15   | k_step   | `clamp(deepest loop, 1, 3)`, penalty `|k - target| / 2`   |
//! | 0.30   | fuzz     | see below                                                 |
//! | 0.10   | solver   | z3 if the program has 4+ ifs, else boolector              |
//! | 0.05   | encoding | floatbv                                                   |
//!
//! A program is loop-heavy when it nests loops two deep, has an infinite
//! while/do loop or has three or more loops. It is nondet-heavy when it makes
//! two or more nondet calls or calls nondet inside a loop. Nondet-heavy
//! programs want the fuzzer on for 188 s (nondet in a loop) or 83 s
//! (otherwise): off costs 1, an on-time `s` costs `min(1, |s - target| / 150)`.
//! Other programs want the fuzzer off: on-time `s` costs `min(1, 0.2 + s / 250)`.
//! The context bound does not matter.
//!
//! Cost is the share of the time limit used. For cover-error a cost below 1
//! finds the bug after `cost * limit` seconds; otherwise the run times out
//! with an unknown verdict. For cover-branches the run uses the whole limit
//! and reaches coverage `clamp(1 - cost, 0, 1)`.
//!
//! An empty program (all features zero) has difficulty 0 and so the base
//! outcome regardless of configuration: cost 0.1, i.e. a bug found after a
//! tenth of the limit (class 0), or 90% coverage (class 0).

use crate::features::FeatureVector;
use crate::flags::{Encoding, FlagConfiguration, FlagSpace, Fuzz, Solver, Strategy, Unwind};
use crate::label::{classify, ClassLabel, RunOutcome, TaskType, Verdict};
use alloc::vec::Vec;

pub const BASE_COST: f64 = 0.1;
pub const NOISE_AMPLITUDE: f64 = 0.04;

/// Mock backend parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MockBackend {
    pub seed: u64,
    pub time_limit_seconds: f64,
}

impl Default for MockBackend {
    fn default() -> Self {
        MockBackend { seed: 0, time_limit_seconds: 300.0 }
    }
}

impl MockBackend {
    pub fn run(&self, features: &FeatureVector, config: &FlagConfiguration, task: TaskType) -> RunOutcome {
        mock_outcome(features, config, task, self.time_limit_seconds, self.seed)
    }
}

pub fn difficulty(f: &FeatureVector) -> f64 {
    let deepest = f.max_loop_depth().max(f.if_max_depth);
    let d = 0.2 * f.loop_count() as f64
        + 0.1 * f.if_count as f64
        + 0.15 * f.nondet_call_count as f64
        + 0.1 * deepest as f64;
    d.min(1.0)
}

pub fn is_loop_heavy(f: &FeatureVector) -> bool {
    f.max_loop_depth() >= 2 || f.while_infinite_count + f.do_infinite_count >= 1 || f.loop_count() >= 3
}

pub fn is_nondet_heavy(f: &FeatureVector) -> bool {
    f.nondet_call_count >= 2 || f.has_nondet_in_loop
}

/// Noise-free penalty of `config` for this program, in `[0, 1]`.
pub fn mismatch(f: &FeatureVector, config: &FlagConfiguration) -> f64 {
    let loop_heavy = is_loop_heavy(f);
    let strategy = match (config.strategy, loop_heavy) {
        (Strategy::KInduction, true) | (Strategy::Incremental, false) => 0.0,
        _ => 1.0,
    };
    let unwind = match (config.unwind, loop_heavy) {
        (Unwind::Unlimited, true) | (Unwind::Bounded(_), false) => 0.0,
        _ => 1.0,
    };
    let target_k = f.max_loop_depth().clamp(1, 3) as f64;
    let k_step = (libm::fabs(config.k_step as f64 - target_k) / 2.0).min(1.0);
    let fuzz = if is_nondet_heavy(f) {
        let target = if f.has_nondet_in_loop { 188.0 } else { 83.0 };
        match config.fuzz {
            Fuzz::Off => 1.0,
            Fuzz::On(s) => (libm::fabs(s as f64 - target) / 150.0).min(1.0),
        }
    } else {
        match config.fuzz {
            Fuzz::Off => 0.0,
            Fuzz::On(s) => (0.2 + s as f64 / 250.0).min(1.0),
        }
    };
    let solver = match (config.solver, f.if_count >= 4) {
        (Solver::Z3, true) | (Solver::Boolector, false) => 0.0,
        _ => 1.0,
    };
    let encoding = match config.encoding {
        Encoding::FloatBv => 0.0,
        Encoding::FixedBv => 1.0,
    };
    0.20 * strategy + 0.20 * unwind + 0.15 * k_step + 0.30 * fuzz + 0.10 * solver + 0.05 * encoding
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn config_code(c: &FlagConfiguration) -> [u64; 7] {
    [
        c.strategy as u64,
        c.solver as u64,
        c.encoding as u64,
        u64::from(c.k_step),
        u64::from(c.context_bound),
        match c.unwind {
            Unwind::Bounded(n) => u64::from(n),
            Unwind::Unlimited => u64::MAX,
        },
        match c.fuzz {
            Fuzz::Off => u64::MAX,
            Fuzz::On(s) => u64::from(s),
        },
    ]
}

/// Seeded noise in `[-1, 1)`.
pub fn noise(f: &FeatureVector, config: &FlagConfiguration, seed: u64) -> f64 {
    let mut h = splitmix64(seed);
    for x in f.to_array() {
        h = splitmix64(h ^ x.to_bits());
    }
    for x in config_code(config) {
        h = splitmix64(h ^ x);
    }
    // top 53 bits as a uniform double in [0, 1)
    let unit = (h >> 11) as f64 / (1u64 << 53) as f64;
    2.0 * unit - 1.0
}

pub fn cost(f: &FeatureVector, config: &FlagConfiguration, seed: u64) -> f64 {
    let d = difficulty(f);
    BASE_COST + d * (0.1 + 1.2 * mismatch(f, config) + NOISE_AMPLITUDE * noise(f, config, seed))
}

/// The mock run outcome of `config` on a program with features `f`.
pub fn mock_outcome(
    f: &FeatureVector,
    config: &FlagConfiguration,
    task: TaskType,
    time_limit_seconds: f64,
    seed: u64,
) -> RunOutcome {
    let c = cost(f, config, seed).max(0.0);
    let outcome = match task {
        TaskType::CoverError if c < 1.0 => {
            RunOutcome::cover_error(Verdict::BugDetected, c * time_limit_seconds, time_limit_seconds)
        }
        TaskType::CoverError => RunOutcome::cover_error(Verdict::Unknown, time_limit_seconds, time_limit_seconds),
        TaskType::CoverBranches => {
            RunOutcome::cover_branches((1.0 - c).clamp(0.0, 1.0), time_limit_seconds, time_limit_seconds)
        }
    };
    outcome.expect("mock outcomes satisfy RunOutcome invariants for a positive time limit")
}

/// True class of every configuration of `space`, in canonical order.
pub fn true_classes(f: &FeatureVector, space: &FlagSpace, task: TaskType, time_limit_seconds: f64, seed: u64) -> Vec<ClassLabel> {
    space
        .iter()
        .map(|c| classify(&mock_outcome(f, &c, task, time_limit_seconds, seed)))
        .collect()
}
