//! Learning which backend flags suit a C program.
//!
//! The pipeline is: [`lexer`] turns C source into tokens, [`features`]
//! computes a 21-value structural profile, [`flags`] enumerates the 384
//! backend configurations, [`label`] grades one backend run on a 0–5
//! ordinal scale, [`models`] fits classifiers/regressors on
//! `(features, flags) -> class` rows, and [`predict`] scores every
//! configuration for an unseen program and picks the best one.
//!
//! [`mock`] is a deterministic stand-in backend with a planted ground truth
//! that lets the whole loop be exercised without a real verifier.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod features;
pub mod flags;
pub mod label;
pub mod lexer;
pub mod mock;
pub mod models;
pub mod predict;

pub use features::{extract_features, FeatureVector, DEFAULT_NONDET_PREFIX, FEATURE_NAMES};
pub use flags::{enumerate_flags, BackendArgMap, FlagConfiguration, FlagSpace, Fuzz, Solver, Strategy, Encoding, Unwind};
pub use label::{classify, ClassLabel, RunOutcome, TaskType, Verdict};
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use models::{TrainedModel, TrainingMatrix};
pub use predict::{recommend, Recommendation};
