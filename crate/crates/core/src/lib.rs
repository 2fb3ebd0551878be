//! Activation diversity diagnostics.
//!
//! Measures intra-neuron diversity (binned Shannon entropy per neuron) and
//! inter-neuron diversity (pairwise Kraskov mutual information) over
//! activation matrices, and uses them to tell heuristic memorization from
//! example-level memorization and to rank models without labels.
//!
//! * [`tensor_io`] reads and writes activation matrices (NPY v1.0 and CSV).
//! * [`estimators`] holds the entropy, digamma and KSG estimators.
//! * [`analysis`] runs the estimators over a whole matrix, fits densities
//!   over MI values and computes rank correlations.
//! * [`toylab`] reproduces the concentric-circles experiments with a small
//!   feed-forward network trained from scratch.
//!
//! The `parallel` feature (on by default) evaluates neuron pairs and sweep
//! runs on the rayon pool. Without it every [`Execution`] runs sequentially.
//! Results are bit-identical either way.

pub mod analysis;
pub mod error;
pub mod estimators;
pub mod par;
pub mod tensor_io;
pub mod toylab;

pub use analysis::{
    analyze, analyze_with, fit_density, kendall_tau, pearson, rank_models, DensityModel,
    DiversityReport, MiSummary, Orientation, RankingResult,
};
pub use error::{Error, Result};
pub use estimators::{
    digamma, entropy, ksg_mi, DigammaMode, EntropyVector, EstimatorConfig, MiMatrix, MiMode,
};
pub use par::Execution;
pub use tensor_io::{read_array, read_csv, write_array, ActivationMatrix};
