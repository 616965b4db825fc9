use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the acquisition toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has {len} entries, expected {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, len: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("input is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NonHermitianInput { asymmetry: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("could not draw a separable geometry after {attempts} attempts")]
    SeparabilityFailure { attempts: usize },

    #[error("codebook synthesis failed: {0}")]
    SynthesisFailure(String),

    #[error("angle {aoa_rad} rad lies outside the codebook coverage")]
    OutOfRange { aoa_rad: f64 },

    #[error("noise subspace degenerate: found {found} local minima, need {needed}")]
    SubspaceDegenerate { found: usize, needed: usize },

    #[error("beta path is empty")]
    EmptyPath,

    #[error("row {row} of the beamspace estimate has empty support")]
    EmptySupport { row: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {message}")]
    ConfigParse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
