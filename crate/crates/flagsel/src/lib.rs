//! File formats, backend runners, dataset campaigns and the `flagsel`
//! command line, built on [`flagsel_core`].
//!
//! A campaign runs every benchmark of a [`manifest`] against every flag
//! configuration through a [`runner`], labels each run and writes a JSONL
//! [`dataset`]. [`modelio`] trains and stores models from such datasets,
//! and [`cli`] wires everything into one binary.

pub mod campaign;
pub mod cli;
pub mod dataset;
pub mod manifest;
pub mod modelio;
pub mod runner;
pub mod synth;

use std::path::PathBuf;

pub use flagsel_core as core;

/// Everything that can go wrong outside the pure core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("dataset line {line}: {message}")]
    DatasetLine { line: usize, message: String },
    #[error("{what} schema version {found}, expected {expected}")]
    SchemaVersion { what: &'static str, found: u64, expected: u64 },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Lex(#[from] flagsel_core::LexError),
    #[error(transparent)]
    Flags(#[from] flagsel_core::flags::FlagError),
    #[error(transparent)]
    Model(#[from] flagsel_core::models::ModelError),
    #[error(transparent)]
    Predict(#[from] flagsel_core::predict::PredictError),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit status: 3 for broken invariants, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Internal(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Read a whole file, attaching the path to any error.
pub fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Read the features of a C source file.
pub fn features_of_file(
    path: &std::path::Path,
    nondet_prefixes: &[&str],
) -> Result<flagsel_core::FeatureVector> {
    let source = read_file(path)?;
    flagsel_core::extract_features(&source, nondet_prefixes)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}
