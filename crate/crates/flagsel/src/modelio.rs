//! Training models from datasets, model files and training reports.

use std::path::Path;

use serde::Serialize;

use flagsel_core::label::NUM_CLASSES;
use flagsel_core::models::{
    evaluate, is_validation_benchmark, train_cascade, train_dtc, train_nnr, train_svc, ConfusionMatrix, DtcParams,
    MlpParams, ModelKind, SvcParams, MODEL_SCHEMA_VERSION,
};
use flagsel_core::{TrainedModel, TrainingMatrix};

use crate::dataset::DatasetRecord;
use crate::{read_file, Error, Result};

/// Hyperparameters of every learner; only those of the chosen kind are used.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainOptions {
    pub dtc: DtcParams,
    pub svc: SvcParams,
    pub nnr: MlpParams,
    /// Hold out benchmarks whose id hashes into the validation fold.
    pub holdout: bool,
}

pub fn training_matrix<'a>(records: impl IntoIterator<Item = &'a DatasetRecord>) -> Result<TrainingMatrix> {
    let runs = records.into_iter().map(|r| (&r.features, &r.flags, r.class, r.task));
    Ok(TrainingMatrix::from_runs(runs)?)
}

pub fn train(kind: ModelKind, data: &TrainingMatrix, opts: &TrainOptions) -> Result<TrainedModel> {
    Ok(match kind {
        ModelKind::Dtc => train_dtc(data, &opts.dtc)?,
        ModelKind::Svc => train_svc(data, &opts.svc)?,
        ModelKind::Nnr => train_nnr(data, &opts.nnr)?,
        ModelKind::Cascade => train_cascade(data, &opts.dtc, &opts.svc, &opts.nnr)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub rows: usize,
    pub accuracy: f64,
    /// Recall per true class, null for classes absent from the rows.
    pub per_class_accuracy: [Option<f64>; NUM_CLASSES],
    /// `confusion[true][predicted]`.
    pub confusion: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl From<ConfusionMatrix> for Evaluation {
    fn from(cm: ConfusionMatrix) -> Self {
        Evaluation {
            rows: cm.total() as usize,
            accuracy: cm.accuracy(),
            per_class_accuracy: cm.per_class_accuracy(),
            confusion: cm.counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingReport {
    pub kind: ModelKind,
    pub training: Evaluation,
    pub validation: Option<Evaluation>,
    pub warnings: Vec<String>,
}

/// Train on `records`, optionally holding out the validation fold, and
/// report accuracy on the training rows and the held-out rows.
pub fn train_from_records(
    kind: ModelKind,
    records: &[DatasetRecord],
    opts: &TrainOptions,
) -> Result<(TrainedModel, TrainingReport)> {
    if records.is_empty() {
        return Err(Error::Input("dataset has no records".into()));
    }
    let (train_rows, valid_rows): (Vec<&DatasetRecord>, Vec<&DatasetRecord>) = if opts.holdout {
        records.iter().partition(|r| !is_validation_benchmark(&r.benchmark_id))
    } else {
        (records.iter().collect(), vec![])
    };
    if train_rows.is_empty() {
        return Err(Error::Input("every benchmark fell into the validation fold".into()));
    }
    let data = training_matrix(train_rows)?;
    let model = train(kind, &data, opts)?;
    let training = evaluate(&model, &data)?.into();
    let validation = if valid_rows.is_empty() {
        None
    } else {
        Some(evaluate(&model, &training_matrix(valid_rows)?)?.into())
    };
    let report = TrainingReport { kind, training, validation, warnings: model.warnings.clone() };
    Ok((model, report))
}

pub fn model_to_json(model: &TrainedModel) -> Result<String> {
    serde_json::to_string(model).map_err(|e| Error::Internal(format!("serializing model: {e}")))
}

pub fn model_from_json(text: &[u8]) -> Result<TrainedModel> {
    // look at the version before the full parse so old files get a clear error
    let value: serde_json::Value =
        serde_json::from_slice(text).map_err(|e| Error::Input(format!("model file is not JSON: {e}")))?;
    let found = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Input("model file has no schema_version".into()))?;
    if found != u64::from(MODEL_SCHEMA_VERSION) {
        return Err(Error::SchemaVersion { what: "model", found, expected: u64::from(MODEL_SCHEMA_VERSION) });
    }
    let model: TrainedModel =
        serde_json::from_value(value).map_err(|e| Error::Input(format!("malformed model file: {e}")))?;
    model.check_feature_order()?;
    Ok(model)
}

pub fn save_model(path: &Path, model: &TrainedModel) -> Result<()> {
    let mut text = model_to_json(model)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    model_from_json(&read_file(path)?).map_err(|e| match e {
        Error::Input(m) => Error::Input(format!("{}: {m}", path.display())),
        e => e,
    })
}
