//! The `flagsel` command line.
//!
//! Exit status: 0 success, 1 usage error, 2 bad input or data, 3 broken
//! internal invariant. Diagnostics go to stderr; stdout carries only the
//! command's output.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use flagsel_core::models::{DtcParams, Kernel, MlpParams, ModelKind, SvcParams};
use flagsel_core::predict::{recommend_for_features, Recommendation};
use flagsel_core::{classify, BackendArgMap, FlagConfiguration, FlagSpace, TaskType, DEFAULT_NONDET_PREFIX, FEATURE_NAMES};

use crate::campaign::{default_jobs, run_campaign, CampaignOptions, JOBS_ENV};
use crate::dataset::{audit, read_dataset, write_dataset, DatasetRecord};
use crate::manifest::{prepare, read_manifest, DEFAULT_TIME_LIMIT_SECONDS};
use crate::modelio::{load_model, save_model, train_from_records, Evaluation, TrainOptions, TrainingReport};
use crate::runner::{BackendRunner, ExecRunner, MockRunner, RunJob};
use crate::{features_of_file, read_file, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "flagsel", version, about = "Pick verifier flags for C programs with learned models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the structural features of a C file.
    Extract(ExtractArgs),
    /// List the flag configurations in canonical order.
    Enumerate(EnumerateArgs),
    /// Run every benchmark of a manifest against every configuration.
    Campaign(CampaignArgs),
    /// Train a model on a campaign dataset.
    Train(TrainArgs),
    /// Recommend a configuration for a C file.
    Predict(PredictArgs),
    /// Recommend a configuration and run the backend with it.
    Run(RunArgs),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Backend {
    Mock,
    Exec(String),
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.split_once(':') {
            _ if s == "mock" => Ok(Backend::Mock),
            Some(("exec", cmd)) if !cmd.trim().is_empty() => Ok(Backend::Exec(cmd.to_string())),
            _ => Err("expected `mock` or `exec:<command>`".into()),
        }
    }
}

#[derive(Debug, Args)]
struct NondetArgs {
    /// Identifier prefix marking nondeterministic input calls (repeatable).
    #[arg(long = "nondet-prefix", value_name = "PREFIX", default_value = DEFAULT_NONDET_PREFIX)]
    prefixes: Vec<String>,
}

impl NondetArgs {
    fn as_strs(&self) -> Vec<&str> {
        self.prefixes.iter().map(String::as_str).collect()
    }
}

#[derive(Debug, Args)]
struct ExtractArgs {
    file: PathBuf,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    nondet: NondetArgs,
}

#[derive(Debug, Args)]
struct EnumerateArgs {
    /// Print only the configuration with this canonical index.
    #[arg(long)]
    index: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct CampaignArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// `mock` or `exec:<command>`.
    #[arg(long)]
    backend: Backend,
    #[arg(long)]
    out: PathBuf,
    /// Worker count [default: $FLAGSEL_JOBS or the number of CPUs].
    #[arg(long, env = JOBS_ENV)]
    jobs: Option<usize>,
    /// Seed of the mock backend's noise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep the runs already in `--out` and only run the missing ones.
    #[arg(long)]
    resume: bool,
    /// JSON file mapping flag values to backend arguments.
    #[arg(long)]
    arg_map: Option<PathBuf>,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    nondet: NondetArgs,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// dtc, svc, nnr or cascade.
    #[arg(long = "model")]
    kind: ModelKindArg,
    #[arg(long)]
    out: PathBuf,
    /// Seed for SVM subsampling and network initialisation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tree depth limit [default: none].
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 1)]
    min_samples_leaf: usize,
    /// SVM box constraint.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// SVM kernel: rbf or linear.
    #[arg(long, default_value = "rbf")]
    kernel: String,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Rows kept for SVM training; larger datasets are subsampled.
    #[arg(long, default_value_t = 2000)]
    max_samples: usize,
    /// Hidden layer widths, comma separated.
    #[arg(long, default_value = "32", value_delimiter = ',')]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    /// Hold out a fifth of the benchmarks and report accuracy on them.
    #[arg(long)]
    holdout: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy)]
struct ModelKindArg(ModelKind);

impl FromStr for ModelKindArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.parse().map(ModelKindArg).map_err(|_| "expected dtc, svc, nnr or cascade".into())
    }
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    file: PathBuf,
    /// cover-error or cover-branches.
    #[arg(long)]
    task: TaskType,
    /// Print only the backend arguments of the recommendation.
    #[arg(long)]
    emit_args: bool,
    #[arg(long)]
    arg_map: Option<PathBuf>,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    nondet: NondetArgs,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    file: PathBuf,
    /// `mock` or `exec:<command>`.
    #[arg(long)]
    backend: Backend,
    #[arg(long, default_value = "cover-error")]
    task: TaskType,
    #[arg(long, default_value_t = DEFAULT_TIME_LIMIT_SECONDS)]
    time_limit: f64,
    /// Seed of the mock backend's noise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    arg_map: Option<PathBuf>,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    nondet: NondetArgs,
}

/// Parse `argv` (program name first), run the command and return the exit
/// status.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(rendered.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(rendered.as_bytes());
                    1
                }
            };
        }
    };
    let result = match cli.command {
        Command::Extract(a) => extract(a, stdout),
        Command::Enumerate(a) => enumerate(a, stdout),
        Command::Campaign(a) => campaign(a, stdout, stderr),
        Command::Train(a) => train(a, stdout),
        Command::Predict(a) => predict(a, stdout),
        Command::Run(a) => run_backend(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn out_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn emit_json<T: Serialize + ?Sized>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string(value).map_err(|e| Error::Internal(e.to_string()))?;
    writeln!(out, "{text}").map_err(out_err)
}

fn load_arg_map(path: Option<&Path>) -> Result<BackendArgMap> {
    match path {
        None => Ok(BackendArgMap::standard()),
        Some(p) => serde_json::from_slice(&read_file(p)?)
            .map_err(|e| Error::Input(format!("{}: {e}", p.display()))),
    }
}

fn extract(a: ExtractArgs, out: &mut dyn Write) -> Result<()> {
    let f = features_of_file(&a.file, &a.nondet.as_strs())?;
    if a.json {
        return emit_json(out, &f);
    }
    for (name, value) in FEATURE_NAMES.iter().zip(f.to_array()) {
        writeln!(out, "{name:<34} {value}").map_err(out_err)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct IndexedConfig {
    index: usize,
    flags: FlagConfiguration,
}

fn enumerate(a: EnumerateArgs, out: &mut dyn Write) -> Result<()> {
    let space = FlagSpace::default();
    let chosen: Vec<IndexedConfig> = match a.index {
        Some(i) => vec![IndexedConfig { index: i, flags: space.config(i)? }],
        None => space.iter().enumerate().map(|(index, flags)| IndexedConfig { index, flags }).collect(),
    };
    if a.json {
        return match a.index {
            Some(_) => emit_json(out, &chosen[0]),
            None => emit_json(out, &chosen),
        };
    }
    for c in &chosen {
        writeln!(out, "{}", c.flags).map_err(out_err)?;
    }
    Ok(())
}

fn make_runner(backend: &Backend, seed: u64) -> Result<Box<dyn BackendRunner>> {
    Ok(match backend {
        Backend::Mock => Box::new(MockRunner { seed }),
        Backend::Exec(cmd) => Box::new(ExecRunner::from_command_line(cmd)?),
    })
}

#[derive(Serialize)]
struct CampaignSummary<'a> {
    out: &'a Path,
    records: usize,
    failed_runs: usize,
}

fn campaign(a: CampaignArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let jobs = a.jobs.unwrap_or_else(default_jobs);
    if jobs == 0 {
        return Err(Error::Input("--jobs must be at least 1".into()));
    }
    let benchmarks = prepare(&read_manifest(&a.manifest)?, &a.nondet.as_strs())?;
    let mapping = load_arg_map(a.arg_map.as_deref())?;
    let existing = if a.resume && a.out.exists() { read_dataset(&a.out)? } else { vec![] };
    let runner = make_runner(&a.backend, a.seed)?;

    let step = (benchmarks.len() * FlagSpace::default().len() / 20).max(1);
    let progress = |done: usize, total: usize| {
        if done % step == 0 || done == total {
            eprintln!("campaign: {done}/{total} runs");
        }
    };
    let opts = CampaignOptions {
        mapping,
        jobs,
        existing,
        progress: Some(&progress),
        ..CampaignOptions::default()
    };
    let records = run_campaign(&benchmarks, runner.as_ref(), &opts)?;
    if let Some(bad) = audit(&records).first() {
        return Err(Error::Internal(format!("record {} stored class {} disagrees with its outcome", bad.index, bad.stored)));
    }
    write_dataset(&a.out, &records)?;
    let failed_runs = records.iter().filter(|r| r.note.is_some()).count();
    let summary = CampaignSummary { out: &a.out, records: records.len(), failed_runs };
    if a.json {
        return emit_json(out, &summary);
    }
    let _ = writeln!(err, "campaign: wrote {} records to {} ({failed_runs} failed runs)", records.len(), a.out.display());
    Ok(())
}

fn train_options(a: &TrainArgs) -> Result<TrainOptions> {
    let kernel = match a.kernel.as_str() {
        "rbf" => Kernel::Rbf { gamma: a.gamma },
        "linear" => Kernel::Linear,
        k => return Err(Error::Input(format!("unknown kernel `{k}`"))),
    };
    Ok(TrainOptions {
        dtc: DtcParams { max_depth: a.max_depth, min_samples_leaf: a.min_samples_leaf },
        svc: SvcParams { c: a.c, kernel, max_samples: a.max_samples, seed: a.seed, ..SvcParams::default() },
        nnr: MlpParams {
            hidden_layers: a.hidden.clone(),
            learning_rate: a.learning_rate,
            epochs: a.epochs,
            batch_size: a.batch_size,
            seed: a.seed,
        },
        holdout: a.holdout,
    })
}

fn check_records(records: &[DatasetRecord]) -> Result<()> {
    match audit(records).first() {
        None => Ok(()),
        Some(bad) => Err(Error::Input(format!(
            "dataset record {} stores class {} but its outcome gives {}",
            bad.index + 1,
            bad.stored,
            bad.recomputed.map_or("nothing valid".to_string(), |c| c.to_string())
        ))),
    }
}

fn write_evaluation(out: &mut dyn Write, title: &str, e: &Evaluation) -> std::io::Result<()> {
    writeln!(out, "{title}: {} rows, accuracy {:.4}", e.rows, e.accuracy)?;
    write!(out, "  per-class accuracy:")?;
    for (c, acc) in e.per_class_accuracy.iter().enumerate() {
        match acc {
            Some(v) => write!(out, " {c}={v:.3}")?,
            None => write!(out, " {c}=-")?,
        }
    }
    writeln!(out)?;
    writeln!(out, "  confusion (rows true, columns predicted):")?;
    for (c, row) in e.confusion.iter().enumerate() {
        write!(out, "    {c}:")?;
        for n in row {
            write!(out, " {n:>7}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn write_report(out: &mut dyn Write, r: &TrainingReport) -> std::io::Result<()> {
    writeln!(out, "model: {}", r.kind.name())?;
    write_evaluation(out, "training", &r.training)?;
    if let Some(v) = &r.validation {
        write_evaluation(out, "validation", v)?;
    }
    for w in &r.warnings {
        writeln!(out, "warning: {w}")?;
    }
    Ok(())
}

fn train(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let opts = train_options(&a)?;
    let records = read_dataset(&a.data)?;
    check_records(&records)?;
    let (model, report) = train_from_records(a.kind.0, &records, &opts)?;
    save_model(&a.out, &model)?;
    if a.json {
        return emit_json(out, &report);
    }
    write_report(out, &report).map_err(out_err)
}

fn recommendation(
    model_path: &Path,
    file: &Path,
    task: TaskType,
    arg_map: Option<&Path>,
    nondet: &NondetArgs,
) -> Result<Recommendation> {
    let model = load_model(model_path)?;
    let mapping = load_arg_map(arg_map)?;
    let features = features_of_file(file, &nondet.as_strs())?;
    Ok(recommend_for_features(&features, &model, task, &FlagSpace::default(), &mapping)?)
}

fn predict(a: PredictArgs, out: &mut dyn Write) -> Result<()> {
    let rec = recommendation(&a.model, &a.file, a.task, a.arg_map.as_deref(), &a.nondet)?;
    if a.emit_args {
        return writeln!(out, "{}", rec.backend_args.join(" ")).map_err(out_err);
    }
    if a.json {
        return emit_json(out, &rec);
    }
    writeln!(out, "recommended: {}", rec.recommended_flags).map_err(out_err)?;
    writeln!(out, "backend args: {}", rec.backend_args.join(" ")).map_err(out_err)?;
    writeln!(out, "{:>4} {:>5}  {:<28} flags", "rank", "index", "predicted key").map_err(out_err)?;
    for (rank, r) in rec.top.iter().enumerate() {
        let key = serde_json::to_string(&r.predicted_key).map_err(|e| Error::Internal(e.to_string()))?;
        writeln!(out, "{:>4} {:>5}  {:<28} {}", rank + 1, r.canonical_index, key, r.config).map_err(out_err)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RunSummary {
    recommended_flags: FlagConfiguration,
    backend_args: Vec<String>,
    task: TaskType,
    verdict: Option<flagsel_core::Verdict>,
    coverage_score: Option<f64>,
    elapsed_seconds: f64,
    time_limit_seconds: f64,
    class: flagsel_core::ClassLabel,
    note: Option<String>,
}

fn run_backend(a: RunArgs, out: &mut dyn Write) -> Result<()> {
    if !(a.time_limit.is_finite() && a.time_limit > 0.0) {
        return Err(Error::Input("--time-limit must be positive".into()));
    }
    let rec = recommendation(&a.model, &a.file, a.task, a.arg_map.as_deref(), &a.nondet)?;
    let features = features_of_file(&a.file, &a.nondet.as_strs())?;
    let runner = make_runner(&a.backend, a.seed)?;
    let report = runner.run(&RunJob {
        program: &a.file,
        features: &features,
        config: &rec.recommended_flags,
        args: &rec.backend_args,
        task: a.task,
        time_limit_seconds: a.time_limit,
    });
    let o = report.outcome;
    let summary = RunSummary {
        recommended_flags: rec.recommended_flags,
        backend_args: rec.backend_args,
        task: a.task,
        verdict: o.verdict(),
        coverage_score: o.coverage(),
        elapsed_seconds: o.elapsed_seconds(),
        time_limit_seconds: o.time_limit_seconds(),
        class: classify(&o),
        note: report.note,
    };
    if a.json {
        return emit_json(out, &summary);
    }
    let finding = match (summary.verdict, summary.coverage_score) {
        (Some(flagsel_core::Verdict::BugDetected), _) => "bug detected".to_string(),
        (Some(flagsel_core::Verdict::Unknown), _) => "unknown".to_string(),
        (None, Some(c)) => format!("coverage {c}"),
        (None, None) => String::new(),
    };
    writeln!(out, "flags: {}", summary.recommended_flags).map_err(out_err)?;
    writeln!(out, "outcome: {finding}, {}s of {}s", summary.elapsed_seconds, summary.time_limit_seconds)
        .map_err(out_err)?;
    writeln!(out, "class: {}", summary.class).map_err(out_err)?;
    if let Some(n) = &summary.note {
        writeln!(out, "note: {n}").map_err(out_err)?;
    }
    Ok(())
}
