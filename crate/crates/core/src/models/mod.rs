//! Learners mapping `(program features, flag configuration)` to a class.
//!
//! Inputs are 32-dimensional: the 21 program features, then the flags with
//! strategy/solver/encoding one-hot (two columns each) and k-step, context
//! bound, unwind (unlimited as -1), fuzz enabled bit and fuzz seconds as
//! numbers. Every column except the one-hot ones is z-normalized with
//! statistics from the training data, stored alongside the model.
//!
//! Four model kinds share [`TrainedModel`]: a CART decision tree, a
//! one-vs-rest SVM, an MLP regressing the class value and a cascade of the
//! three ranked lexicographically.

mod mlp;
mod svm;
mod tree;
mod weights;

pub use mlp::{Mlp, MlpParams};
pub use svm::{Kernel, SvcModel, SvcParams};
pub use tree::{DecisionTree, DtcParams, TreeNode};
pub use weights::{compute_sample_weights, sample_weight_fractions};

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::features::{FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use crate::flags::{Encoding, FlagConfiguration, Fuzz, Solver, Strategy, Unwind};
use crate::label::{ClassLabel, TaskType, NUM_CLASSES};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

const FLAG_INPUT_NAMES: [&str; 11] = [
    "strategy=incremental",
    "strategy=k-induction",
    "solver=boolector",
    "solver=z3",
    "encoding=floatbv",
    "encoding=fixedbv",
    "k_step",
    "context_bound",
    "unwind",
    "fuzz_enabled",
    "fuzz_seconds",
];

pub const INPUT_DIM: usize = FEATURE_COUNT + FLAG_INPUT_NAMES.len();

/// Column names of the model input, in order.
pub fn input_names() -> Vec<String> {
    FEATURE_NAMES.iter().chain(FLAG_INPUT_NAMES.iter()).map(|s| s.to_string()).collect()
}

/// Which input columns are one-hot (left unnormalized).
pub fn input_categorical_mask() -> Vec<bool> {
    let mut mask = vec![false; INPUT_DIM];
    for m in &mut mask[FEATURE_COUNT..FEATURE_COUNT + 6] {
        *m = true;
    }
    mask
}

/// Encode one `(program, configuration)` pair as a model input row.
pub fn encode_input(features: &FeatureVector, config: &FlagConfiguration) -> [f64; INPUT_DIM] {
    let mut x = [0.0; INPUT_DIM];
    x[..FEATURE_COUNT].copy_from_slice(&features.to_array());
    let hot = |b: bool| if b { 1.0 } else { 0.0 };
    let flags = [
        hot(config.strategy == Strategy::Incremental),
        hot(config.strategy == Strategy::KInduction),
        hot(config.solver == Solver::Boolector),
        hot(config.solver == Solver::Z3),
        hot(config.encoding == Encoding::FloatBv),
        hot(config.encoding == Encoding::FixedBv),
        config.k_step as f64,
        config.context_bound as f64,
        match config.unwind {
            Unwind::Bounded(n) => n as f64,
            Unwind::Unlimited => -1.0,
        },
        hot(config.fuzz != Fuzz::Off),
        config.fuzz.seconds() as f64,
    ];
    x[FEATURE_COUNT..].copy_from_slice(&flags);
    x
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("training data is empty")]
    EmptyData,
    #[error("row {row} has {found} columns, expected {expected}")]
    DimensionMismatch { row: usize, expected: usize, found: usize },
    #[error("sample weight at row {0} is not finite and positive")]
    BadWeight(usize),
    #[error("classifier training needs at least two distinct classes")]
    TooFewClasses,
    #[error("model feature order does not match the input columns")]
    FeatureOrderMismatch,
    #[error("training loss became non-finite at epoch {epoch}")]
    DivergenceDetected { epoch: usize },
    #[error("model schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(&'static str),
    #[error("model was trained for {trained:?}, not {requested}")]
    TaskMismatch { trained: Vec<TaskType>, requested: TaskType },
}

/// Rows of inputs with class labels and sample weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMatrix {
    dim: usize,
    x: Vec<f64>,
    y: Vec<ClassLabel>,
    w: Vec<f64>,
    feature_order: Vec<String>,
    categorical: Vec<bool>,
    tasks: Vec<TaskType>,
}

impl TrainingMatrix {
    /// Build from explicit rows. `categorical` marks columns that are not
    /// normalized; pass all `false` for plain numeric data.
    pub fn new(
        feature_order: Vec<String>,
        categorical: Vec<bool>,
        rows: &[Vec<f64>],
        y: Vec<ClassLabel>,
        w: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if rows.is_empty() {
            return Err(ModelError::EmptyData);
        }
        let dim = feature_order.len();
        if categorical.len() != dim || y.len() != rows.len() || w.len() != rows.len() {
            return Err(ModelError::DimensionMismatch { row: 0, expected: rows.len(), found: y.len().min(w.len()) });
        }
        let mut x = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(ModelError::DimensionMismatch { row: i, expected: dim, found: r.len() });
            }
            x.extend_from_slice(r);
        }
        if let Some(i) = w.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ModelError::BadWeight(i));
        }
        Ok(TrainingMatrix { dim, x, y, w, feature_order, categorical, tasks: vec![] })
    }

    /// Plain numeric data with balanced class weights and generated column
    /// names.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<ClassLabel>) -> Result<Self, ModelError> {
        let dim = rows.first().map(Vec::len).ok_or(ModelError::EmptyData)?;
        let names = (0..dim).map(|i| format!("x{i}")).collect();
        let w = compute_sample_weights(&y);
        Self::new(names, vec![false; dim], rows, y, w)
    }

    /// Encode labelled runs and weight them by class frequency.
    pub fn from_runs<'a, I>(runs: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (&'a FeatureVector, &'a FlagConfiguration, ClassLabel, TaskType)>,
    {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        let mut tasks = Vec::new();
        for (f, c, label, task) in runs {
            rows.push(encode_input(f, c).to_vec());
            y.push(label);
            if !tasks.contains(&task) {
                tasks.push(task);
            }
        }
        tasks.sort();
        let w = compute_sample_weights(&y);
        let mut m = Self::new(input_names(), input_categorical_mask(), &rows, y, w)?;
        m.tasks = tasks;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.y
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn feature_order(&self) -> &[String] {
        &self.feature_order
    }

    pub fn tasks(&self) -> &[TaskType] {
        &self.tasks
    }

    pub fn set_weights(&mut self, w: Vec<f64>) -> Result<(), ModelError> {
        if w.len() != self.len() {
            return Err(ModelError::DimensionMismatch { row: 0, expected: self.len(), found: w.len() });
        }
        if let Some(i) = w.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ModelError::BadWeight(i));
        }
        self.w = w;
        Ok(())
    }

    pub fn distinct_classes(&self) -> Vec<ClassLabel> {
        let mut seen = [false; NUM_CLASSES];
        for c in &self.y {
            seen[c.index()] = true;
        }
        (0..NUM_CLASSES as u8).filter(|&c| seen[c as usize]).filter_map(ClassLabel::new).collect()
    }

    /// Rows after applying `norm`, row-major.
    fn normalized(&self, norm: &Normalization) -> Vec<f64> {
        let mut out = self.x.clone();
        for row in out.chunks_mut(self.dim) {
            norm.apply_in_place(row);
        }
        out
    }
}

/// Per-column `(x - mean) / std`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn fit(data: &TrainingMatrix) -> Self {
        let n = data.len() as f64;
        let mut mean = vec![0.0; data.dim];
        let mut std = vec![1.0; data.dim];
        for d in 0..data.dim {
            if data.categorical[d] {
                continue;
            }
            let m = (0..data.len()).map(|i| data.row(i)[d]).sum::<f64>() / n;
            let var = (0..data.len()).map(|i| (data.row(i)[d] - m) * (data.row(i)[d] - m)).sum::<f64>() / n;
            let s = libm::sqrt(var);
            mean[d] = m;
            std[d] = if s > 1e-12 { s } else { 1.0 };
        }
        Normalization { mean, std }
    }

    pub fn apply_in_place(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        let mut out = row.to_vec();
        self.apply_in_place(&mut out);
        out
    }
}

/// What a model says about one input; smaller ranks better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PredictedKey {
    Class(ClassLabel),
    Score(f64),
    Cascade(ClassLabel, ClassLabel, f64),
}

impl PredictedKey {
    /// Lexicographic comparison. Keys of different shapes compare by shape;
    /// a single model only ever produces one shape.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        use PredictedKey::*;
        match (self, other) {
            (Class(a), Class(b)) => a.cmp(b),
            (Score(a), Score(b)) => a.total_cmp(b),
            (Cascade(a1, a2, a3), Cascade(b1, b2, b3)) => {
                a1.cmp(b1).then(a2.cmp(b2)).then(a3.total_cmp(b3))
            }
            _ => self.shape().cmp(&other.shape()),
        }
    }

    fn shape(&self) -> u8 {
        match self {
            PredictedKey::Class(_) => 0,
            PredictedKey::Score(_) => 1,
            PredictedKey::Cascade(..) => 2,
        }
    }

    /// A class for reporting: the class itself, the clamped and rounded
    /// regression value, or the cascade's leading (tree) class.
    pub fn class(&self) -> ClassLabel {
        match *self {
            PredictedKey::Class(c) | PredictedKey::Cascade(c, _, _) => c,
            PredictedKey::Score(v) => ClassLabel::new(libm::round(v.clamp(0.0, 5.0)) as u8).expect("clamped"),
        }
    }

    /// The last numeric component (the regression value for `Score` and
    /// `Cascade`, the class for `Class`).
    pub fn map_last(self, f: impl Fn(f64) -> f64) -> Self {
        match self {
            PredictedKey::Score(v) => PredictedKey::Score(f(v)),
            PredictedKey::Cascade(a, b, v) => PredictedKey::Cascade(a, b, f(v)),
            k => k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dtc,
    Svc,
    Nnr,
    Cascade,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Dtc => "dtc",
            ModelKind::Svc => "svc",
            ModelKind::Nnr => "nnr",
            ModelKind::Cascade => "cascade",
        }
    }
}

impl core::str::FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dtc" => Ok(ModelKind::Dtc),
            "svc" => Ok(ModelKind::Svc),
            "nnr" => Ok(ModelKind::Nnr),
            "cascade" => Ok(ModelKind::Cascade),
            _ => Err(ModelError::InvalidHyperparameter("model kind")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "lowercase")]
pub enum ModelParams {
    Dtc(DecisionTree),
    Svc(SvcModel),
    Nnr(Mlp),
    Cascade { dtc: DecisionTree, svc: SvcModel, nnr: Mlp },
}

/// A fitted model with everything needed to predict: column order,
/// normalization and parameters. Serializes to the model file layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: u32,
    pub feature_order: Vec<String>,
    /// Task types present in the training data.
    pub tasks: Vec<TaskType>,
    pub normalization: Normalization,
    #[serde(flatten)]
    pub params: ModelParams,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl TrainedModel {
    fn wrap(data: &TrainingMatrix, normalization: Normalization, params: ModelParams, warnings: Vec<String>) -> Self {
        TrainedModel {
            schema_version: MODEL_SCHEMA_VERSION,
            feature_order: data.feature_order.clone(),
            tasks: data.tasks.clone(),
            normalization,
            params,
            warnings,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self.params {
            ModelParams::Dtc(_) => ModelKind::Dtc,
            ModelParams::Svc(_) => ModelKind::Svc,
            ModelParams::Nnr(_) => ModelKind::Nnr,
            ModelParams::Cascade { .. } => ModelKind::Cascade,
        }
    }

    /// Reject models written by an incompatible version.
    pub fn check_schema(&self) -> Result<(), ModelError> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(ModelError::SchemaVersion { found: self.schema_version, expected: MODEL_SCHEMA_VERSION });
        }
        Ok(())
    }

    /// Check that this model consumes the standard `(features, flags)`
    /// input layout.
    pub fn check_feature_order(&self) -> Result<(), ModelError> {
        if self.feature_order != input_names() || self.normalization.mean.len() != INPUT_DIM {
            return Err(ModelError::FeatureOrderMismatch);
        }
        Ok(())
    }

    /// Predict from an unnormalized input row.
    pub fn predict_row(&self, x: &[f64]) -> Result<PredictedKey, ModelError> {
        if x.len() != self.feature_order.len() {
            return Err(ModelError::DimensionMismatch { row: 0, expected: self.feature_order.len(), found: x.len() });
        }
        let z = self.normalization.apply(x);
        Ok(match &self.params {
            ModelParams::Dtc(t) => PredictedKey::Class(t.predict(&z)),
            ModelParams::Svc(s) => PredictedKey::Class(s.predict(&z)),
            ModelParams::Nnr(m) => PredictedKey::Score(m.forward(&z)),
            ModelParams::Cascade { dtc, svc, nnr } => PredictedKey::Cascade(dtc.predict(&z), svc.predict(&z), nnr.forward(&z)),
        })
    }

    pub fn predict(&self, features: &FeatureVector, config: &FlagConfiguration) -> Result<PredictedKey, ModelError> {
        self.check_feature_order()?;
        self.predict_row(&encode_input(features, config))
    }
}

fn require_two_classes(data: &TrainingMatrix) -> Result<(), ModelError> {
    if data.distinct_classes().len() < 2 {
        return Err(ModelError::TooFewClasses);
    }
    Ok(())
}

pub fn train_dtc(data: &TrainingMatrix, params: &DtcParams) -> Result<TrainedModel, ModelError> {
    require_two_classes(data)?;
    let norm = Normalization::fit(data);
    let z = data.normalized(&norm);
    let (tree, warnings) = tree::fit(&z, data.dim, &data.y, &data.w, params)?;
    Ok(TrainedModel::wrap(data, norm, ModelParams::Dtc(tree), warnings))
}

pub fn train_svc(data: &TrainingMatrix, params: &SvcParams) -> Result<TrainedModel, ModelError> {
    require_two_classes(data)?;
    let norm = Normalization::fit(data);
    let z = data.normalized(&norm);
    let (svc, warnings) = svm::fit(&z, data.dim, &data.y, &data.w, params)?;
    Ok(TrainedModel::wrap(data, norm, ModelParams::Svc(svc), warnings))
}

pub fn train_nnr(data: &TrainingMatrix, params: &MlpParams) -> Result<TrainedModel, ModelError> {
    let norm = Normalization::fit(data);
    let z = data.normalized(&norm);
    let y: Vec<f64> = data.y.iter().map(|c| c.value() as f64).collect();
    let mlp = mlp::fit(&z, data.dim, &y, &data.w, params)?;
    Ok(TrainedModel::wrap(data, norm, ModelParams::Nnr(mlp), vec![]))
}

/// Train the tree, the SVM and the MLP on the same data and combine them
/// into one model ranking by `(tree class, svm class, mlp value)`.
pub fn train_cascade(
    data: &TrainingMatrix,
    dtc: &DtcParams,
    svc: &SvcParams,
    nnr: &MlpParams,
) -> Result<TrainedModel, ModelError> {
    require_two_classes(data)?;
    let norm = Normalization::fit(data);
    let z = data.normalized(&norm);
    let (tree, mut warnings) = tree::fit(&z, data.dim, &data.y, &data.w, dtc)?;
    let (svm, w2) = svm::fit(&z, data.dim, &data.y, &data.w, svc)?;
    warnings.extend(w2);
    let y: Vec<f64> = data.y.iter().map(|c| c.value() as f64).collect();
    let mlp = mlp::fit(&z, data.dim, &y, &data.w, nnr)?;
    let params = ModelParams::Cascade { dtc: tree, svc: svm, nnr: mlp };
    Ok(TrainedModel::wrap(data, norm, params, warnings))
}

/// Combine three separately trained models into a cascade key.
pub fn predict_cascade(
    dtc: &TrainedModel,
    svc: &TrainedModel,
    nnr: &TrainedModel,
    x: &[f64],
) -> Result<PredictedKey, ModelError> {
    if dtc.feature_order != svc.feature_order || dtc.feature_order != nnr.feature_order {
        return Err(ModelError::FeatureOrderMismatch);
    }
    let class_of = |m: &TrainedModel| -> Result<ClassLabel, ModelError> {
        match m.predict_row(x)? {
            PredictedKey::Class(c) => Ok(c),
            _ => Err(ModelError::InvalidHyperparameter("cascade stage must be a classifier")),
        }
    };
    let score = match nnr.predict_row(x)? {
        PredictedKey::Score(v) => v,
        _ => return Err(ModelError::InvalidHyperparameter("cascade tail must be a regressor")),
    };
    Ok(PredictedKey::Cascade(class_of(dtc)?, class_of(svc)?, score))
}

/// Confusion matrix of predicted vs. true classes, weighted by count.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `counts[true][predicted]`
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let correct: u64 = (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum();
        if self.total() == 0 {
            0.0
        } else {
            correct as f64 / self.total() as f64
        }
    }

    /// Recall per true class; `None` for classes absent from the data.
    pub fn per_class_accuracy(&self) -> [Option<f64>; NUM_CLASSES] {
        let mut out = [None; NUM_CLASSES];
        for (c, row) in self.counts.iter().enumerate() {
            let n: u64 = row.iter().sum();
            if n > 0 {
                out[c] = Some(row[c] as f64 / n as f64);
            }
        }
        out
    }
}

/// Evaluate `model` on every row of `data`.
pub fn evaluate(model: &TrainedModel, data: &TrainingMatrix) -> Result<ConfusionMatrix, ModelError> {
    let mut cm = ConfusionMatrix::default();
    for i in 0..data.len() {
        let pred = model.predict_row(data.row(i))?.class();
        cm.counts[data.y[i].index()][pred.index()] += 1;
    }
    Ok(cm)
}

/// Deterministic 80/20 split by benchmark id: an id lands in the validation
/// fold when its FNV-1a hash is divisible by 5. All rows of one benchmark
/// therefore fall on the same side.
pub fn is_validation_benchmark(id: &str) -> bool {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h % 5 == 0
}
