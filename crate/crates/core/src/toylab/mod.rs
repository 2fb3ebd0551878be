//! Concentric-circles laboratory: synthetic data with shortcut and
//! label-noise knobs, a small rectifier network trained from scratch, norm
//! baselines and sweeps that feed model ranking.

mod circles;
mod mlp;
mod norms;
mod sweep;

pub use circles::{gen_circles, CirclesConfig, Dataset, Split, Variant};
pub use mlp::{capture_activations, eval_accuracy, train_mlp, Hyper, MlpModel, TrainTrace};
pub use norms::{complexity_norms, spectral_norm, ComplexityNorms};
pub use sweep::{
    measure_taus, run_single, run_sweep, LayerStats, RunRecord, SettingSummary, SweepKind,
    SweepResult, ToyRun, SWEEP_SCHEMA,
};
