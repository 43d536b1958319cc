//! Running the benchmark x configuration grid.
//!
//! Runs are independent, so they execute on a bounded rayon pool; results
//! are collected by grid position, which makes the dataset identical for
//! any worker count.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use flagsel_core::{BackendArgMap, FlagConfiguration};

use crate::dataset::DatasetRecord;
use crate::manifest::Benchmark;
use crate::runner::{BackendRunner, RunJob};
use crate::{Error, Result};

/// Called with `(finished, total)` as runs complete, from worker threads.
pub type Progress<'a> = &'a (dyn Fn(usize, usize) + Sync);

pub struct CampaignOptions<'a> {
    pub flags: Vec<FlagConfiguration>,
    pub mapping: BackendArgMap,
    pub jobs: usize,
    /// Records from an earlier, interrupted campaign. Their
    /// (benchmark, configuration) pairs are not run again.
    pub existing: Vec<DatasetRecord>,
    pub progress: Option<Progress<'a>>,
}

impl Default for CampaignOptions<'_> {
    fn default() -> Self {
        CampaignOptions {
            flags: flagsel_core::enumerate_flags(),
            mapping: BackendArgMap::standard(),
            jobs: default_jobs(),
            existing: vec![],
            progress: None,
        }
    }
}

/// Environment variable holding the default worker count.
pub const JOBS_ENV: &str = "FLAGSEL_JOBS";

/// `FLAGSEL_JOBS` if set to a positive integer, otherwise the machine's
/// available parallelism.
pub fn default_jobs() -> usize {
    std::env::var(JOBS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Run every benchmark against every configuration. The result holds
/// exactly `benchmarks.len() * flags.len()` records in benchmark order,
/// then configuration order.
pub fn run_campaign(
    benchmarks: &[Benchmark],
    runner: &dyn BackendRunner,
    options: &CampaignOptions,
) -> Result<Vec<DatasetRecord>> {
    if benchmarks.is_empty() {
        return Err(Error::Manifest("no benchmarks".into()));
    }
    if options.flags.is_empty() {
        return Err(Error::Input("no flag configurations".into()));
    }
    if options.jobs == 0 {
        return Err(Error::Input("jobs must be at least 1".into()));
    }
    let args: Vec<Vec<String>> =
        options.flags.iter().map(|c| options.mapping.to_backend_args(c)).collect::<Result<_, _>>()?;

    let ids: HashSet<&str> = benchmarks.iter().map(|b| b.entry.id.as_str()).collect();
    let mut reused = std::collections::HashMap::new();
    for r in &options.existing {
        if ids.contains(r.benchmark_id.as_str()) {
            reused.insert((r.benchmark_id.as_str(), r.flags), r);
        }
    }

    let nf = options.flags.len();
    let total = benchmarks.len() * nf;
    let done = AtomicUsize::new(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;

    let records: Vec<DatasetRecord> = pool.install(|| {
        (0..total)
            .into_par_iter()
            .map(|cell| {
                let b = &benchmarks[cell / nf];
                let config = &options.flags[cell % nf];
                let record = match reused.get(&(b.entry.id.as_str(), *config)) {
                    Some(r) => (*r).clone(),
                    None => {
                        let job = RunJob {
                            program: &b.entry.path,
                            features: &b.features,
                            config,
                            args: &args[cell % nf],
                            task: b.entry.task,
                            time_limit_seconds: b.entry.time_limit_seconds,
                        };
                        let report = runner.run(&job);
                        DatasetRecord::new(&b.entry.id, b.features, *config, &report.outcome, report.note)
                    }
                };
                let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
                if let Some(p) = options.progress {
                    p(finished, total);
                }
                record
            })
            .collect()
    });
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::BenchmarkEntry;
    use crate::runner::{MockRunner, RunReport};
    use flagsel_core::{FeatureVector, RunOutcome, TaskType};

    fn bench(id: &str, loops: u32) -> Benchmark {
        let features = FeatureVector { while_count: loops, while_max_depth: loops.min(1), while_depth_avg: loops.min(1) as f64, ..Default::default() };
        Benchmark {
            entry: BenchmarkEntry { id: id.into(), path: "x.c".into(), task: TaskType::CoverError, time_limit_seconds: 100.0 },
            features,
        }
    }

    #[test]
    fn grid_size_and_order() {
        let benches = [bench("a", 0), bench("b", 3)];
        let opts = CampaignOptions { jobs: 3, ..Default::default() };
        let records = run_campaign(&benches, &MockRunner::default(), &opts).unwrap();
        assert_eq!(records.len(), 768);
        let flags = flagsel_core::enumerate_flags();
        for (i, r) in records.iter().enumerate() {
            assert_eq!(r.benchmark_id, if i < 384 { "a" } else { "b" });
            assert_eq!(r.flags, flags[i % 384]);
        }
    }

    struct Crashy;

    impl BackendRunner for Crashy {
        fn run(&self, job: &RunJob) -> RunReport {
            RunReport { outcome: RunOutcome::failed(job.task, job.time_limit_seconds).unwrap(), note: Some("crashed".into()) }
        }
    }

    #[test]
    fn failures_become_worst_class() {
        let records = run_campaign(&[bench("a", 1)], &Crashy, &CampaignOptions { jobs: 2, ..Default::default() }).unwrap();
        assert!(records.iter().all(|r| r.class.value() == 5 && r.note.as_deref() == Some("crashed")));
    }

    #[test]
    fn existing_records_are_reused() {
        let first = run_campaign(&[bench("a", 1)], &MockRunner::default(), &CampaignOptions::default()).unwrap();
        let partial = first[..100].to_vec();
        let resumed = run_campaign(
            &[bench("a", 1)],
            &Crashy,
            &CampaignOptions { existing: partial, ..Default::default() },
        )
        .unwrap();
        assert_eq!(&resumed[..100], &first[..100]);
        assert!(resumed[100..].iter().all(|r| r.note.is_some()));
    }
}
