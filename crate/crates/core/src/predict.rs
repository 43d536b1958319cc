//! Choosing a configuration for an unseen program.
//!
//! Every configuration of the flag space is scored by the model and the one
//! with the smallest predicted key wins. Equal keys are broken towards the
//! cheapest run: fuzzer off, then shorter fuzz time, then bounded unwinding,
//! then lower k-step, then lower canonical index.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::Serialize;

use crate::features::{extract_features, FeatureVector};
use crate::flags::{BackendArgMap, FlagConfiguration, FlagError, FlagSpace, Unwind};
use crate::label::TaskType;
use crate::lexer::LexError;
use crate::models::{ModelError, PredictedKey, TrainedModel};

/// How many ranked runners-up a recommendation carries.
pub const TOP_N: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PredictError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Flags(#[from] FlagError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedConfig {
    pub canonical_index: usize,
    #[serde(rename = "flags")]
    pub config: FlagConfiguration,
    pub predicted_key: PredictedKey,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub recommended_flags: FlagConfiguration,
    pub canonical_index: usize,
    pub predicted_key: PredictedKey,
    pub backend_args: Vec<String>,
    /// Model evaluations performed (the size of the flag space).
    #[serde(skip)]
    pub evaluations: usize,
    /// Best [`TOP_N`] configurations in rank order; the first is the
    /// recommendation.
    pub top: Vec<RankedConfig>,
}

/// Cheapest-first order used to break ties between equal keys.
pub fn resource_cmp(a: &RankedConfig, b: &RankedConfig) -> Ordering {
    let unwind_rank = |c: &FlagConfiguration| match c.unwind {
        Unwind::Bounded(n) => (0, n),
        Unwind::Unlimited => (1, 0),
    };
    a.config
        .fuzz
        .seconds()
        .cmp(&b.config.fuzz.seconds())
        .then_with(|| unwind_rank(&a.config).cmp(&unwind_rank(&b.config)))
        .then_with(|| a.config.k_step.cmp(&b.config.k_step))
        .then_with(|| a.canonical_index.cmp(&b.canonical_index))
}

/// Sort scored configurations best first.
pub fn rank_configurations(scored: &mut [RankedConfig]) {
    scored.sort_by(|a, b| a.predicted_key.rank_cmp(&b.predicted_key).then_with(|| resource_cmp(a, b)));
}

/// Score every configuration of `space` for a program with `features`.
pub fn recommend_for_features(
    features: &FeatureVector,
    model: &TrainedModel,
    task: TaskType,
    space: &FlagSpace,
    mapping: &BackendArgMap,
) -> Result<Recommendation, PredictError> {
    model.check_feature_order()?;
    if !model.tasks.is_empty() && !model.tasks.contains(&task) {
        return Err(ModelError::TaskMismatch { trained: model.tasks.clone(), requested: task }.into());
    }
    let mut scored = Vec::with_capacity(space.len());
    for (canonical_index, config) in space.iter().enumerate() {
        let predicted_key = model.predict(features, &config)?;
        scored.push(RankedConfig { canonical_index, config, predicted_key });
    }
    let evaluations = scored.len();
    rank_configurations(&mut scored);
    let best = scored.first().ok_or(FlagError::IndexOutOfRange(0))?.clone();
    let backend_args = mapping.to_backend_args(&best.config)?;
    scored.truncate(TOP_N);
    Ok(Recommendation {
        recommended_flags: best.config,
        canonical_index: best.canonical_index,
        predicted_key: best.predicted_key,
        backend_args,
        evaluations,
        top: scored,
    })
}

/// Extract features from C source and recommend a configuration.
pub fn recommend(
    source: &[u8],
    nondet_prefixes: &[&str],
    model: &TrainedModel,
    task: TaskType,
    space: &FlagSpace,
    mapping: &BackendArgMap,
) -> Result<Recommendation, PredictError> {
    let features = extract_features(source, nondet_prefixes)?;
    recommend_for_features(&features, model, task, space, mapping)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flags::Fuzz;
    use crate::label::ClassLabel;
    use alloc::vec;

    fn ranked(space: &FlagSpace, key: impl Fn(usize) -> PredictedKey) -> Vec<RankedConfig> {
        space
            .iter()
            .enumerate()
            .map(|(i, c)| RankedConfig { canonical_index: i, config: c, predicted_key: key(i) })
            .collect()
    }

    #[test]
    fn all_equal_keys_pick_index_zero() {
        let space = FlagSpace::default();
        let mut r = ranked(&space, |_| PredictedKey::Class(ClassLabel::new(3).unwrap()));
        rank_configurations(&mut r);
        assert_eq!(r[0].canonical_index, 0);
    }

    #[test]
    fn tie_break_prefers_cheap_runs() {
        let space = FlagSpace::default();
        // every config with fuzz off and k_step 2 ties at the best key
        let mut r = ranked(&space, |i| {
            let c = space.config(i).unwrap();
            let good = c.fuzz == Fuzz::Off || c.k_step == 2;
            PredictedKey::Score(if good { 0.0 } else { 1.0 })
        });
        rank_configurations(&mut r);
        let best = r[0].config;
        assert_eq!(best.fuzz, Fuzz::Off);
        assert_eq!(best.unwind, Unwind::Bounded(10));
        assert_eq!(best.k_step, 1);
        assert_eq!(r[0].canonical_index, 0);

        // among fuzz-on configs the shortest fuzz time wins before anything else
        let mut on_only = ranked(&space, |i| {
            let c = space.config(i).unwrap();
            PredictedKey::Score(if c.fuzz == Fuzz::Off { 1.0 } else { 0.0 })
        });
        rank_configurations(&mut on_only);
        assert_eq!(on_only[0].config.fuzz, Fuzz::On(25));
        assert_eq!(on_only[0].config.unwind, Unwind::Bounded(10));
    }

    #[test]
    fn key_dominates_tie_break() {
        let space = FlagSpace::default();
        let mut r = ranked(&space, |i| PredictedKey::Score(if i == 383 { -1.0 } else { 0.0 }));
        rank_configurations(&mut r);
        assert_eq!(r[0].canonical_index, 383);
        let _ = vec![0u8];
    }
}
