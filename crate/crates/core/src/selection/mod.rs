//! Calibration protocol: train/holdout split, five-fold grid search,
//! holdout evaluation with bootstrap intervals, and model ladders.

mod cv;
mod grid;
mod ladder;
mod metrics;
mod split;

pub use cv::{
    boosting_seed, cross_validate, cv_gbt, cv_lasso, cv_svr, fixed_values, lasso_grid, sub_kernel, svr_rows, CvCell,
    CvResult, FoldMoments, LearnerSpec, SvrCv, DEFAULT_BAG, DEFAULT_SHRINKAGE, DEFAULT_SVR_ROWS,
};
pub use grid::{Axis, GridSpec, Spacing};
pub use ladder::{
    fit_entry, run_model_ladder, EntryReport, Inputs, Ladder, LadderData, LadderDefaults, LadderEntry, LadderOutput,
    LadderReport, OutcomeDensity, SampleFilter, TopRef, DENSITY_BINS, REPORTED_PREDICTORS, SHIPPED_LADDERS,
};
pub use metrics::{
    bootstrap_ci, bootstrap_mses, mse, percentile_interval, r_squared_corr, EvalReport, Sample, DEFAULT_BOOTSTRAP,
};
pub use split::{split_train_holdout, split_with_folds, SplitPlan, N_FOLDS};
