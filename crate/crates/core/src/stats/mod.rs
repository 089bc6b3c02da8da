//! Descriptive statistics, t-tests and the regression engine.

pub mod describe;
pub mod design;
pub mod linalg;
pub mod regression;
pub mod special;
pub mod suite;
pub mod ttest;

pub use describe::{mean, median, pearson_corr, sample_sd};
pub use design::{within_demean, Demeaned, DesignMatrix, Effects, OutcomeKind, INTERCEPT};
pub use regression::{ols, poisson_irls, ConvergenceInfo, IrlsOptions, RegressionResult};
pub use ttest::{paired_ttest, welch_ttest, TTest};
pub use suite::{
    fit_model, run_h_models, write_grid_csv, write_models_csv, Estimator, Family, GridPoint, ModelFit,
    ModelSpec, ModelSuiteReport, PanelTable, PanelTables, SuiteSpec, INTERACTION,
};
