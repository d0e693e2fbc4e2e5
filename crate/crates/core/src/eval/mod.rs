//! Metrics, synthetic benchmarks and cross-validated model selection.

mod bench;
mod cv;
mod metrics;
mod synth;

pub use bench::{benchmark_case, median, repeat_seed, BenchRow, BenchSettings, Summary};
pub use cv::{candidate_grid, fold_ranges, kfold_cv, Candidate, CvCell, CvReport};
pub use metrics::{corr_per_column, q_squared, q_squared_per_column, rmsep, Metrics};
pub use synth::{
    add_noise, gen_hopls_model, gen_matrix_response, gen_matrix_structured, gen_tucker_structured,
    generate, LoadingDist, SynthKind, SynthPair, SynthSet, SynthSpec
};

use crate::decomp::DecompError;
use crate::regression::RegressionError;
use crate::tensor::TensorError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("reference response is all zero")]
    ZeroTruth,
    #[error("{samples} samples cannot be split into {folds} folds")]
    TooFewSamples { samples: usize, folds: usize },
    #[error("invalid generator or grid settings: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Regression(#[from] RegressionError),
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}
