//! Whole-matrix diagnostics, MI density fits and model ranking.

mod density;
mod rank;
mod report;

pub use density::{fit_density, Component, DensityModel, GMM_MAX_ITER, GMM_TOL, VARIANCE_FLOOR};
pub use rank::{
    kendall_tau, pearson, rank_measures, rank_models, MeasureTau, Orientation, RankingResult,
};
pub use report::{
    analyze, analyze_with, DiversityReport, MiHistogram, MiSummary, FULL_MI_LIMIT, REPORT_SCHEMA,
};
