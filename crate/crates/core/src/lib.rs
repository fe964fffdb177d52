//! Forecasting long-term income-support receipt from administrative payment spells.
//!
//! The crate is organised as the pipeline runs:
//!
//! - [`data`]: payment taxonomy, spell records, observation windows and the
//!   outcome (share of days covered by qualifying payments).
//! - [`features`]: the predictor catalog and design-matrix assembly with the
//!   zero-impute plus missing-indicator policy.
//! - [`learners`]: OLS, LASSO, epsilon-SVR, boosted regression trees,
//!   fractional probit and linear stacking.
//! - [`selection`]: train/holdout split, 5-fold grid search, holdout metrics
//!   and bootstrap intervals, and the declarative model ladder.
//! - [`cluster`]: agglomerative clustering of predicted at-risk people with
//!   pseudo-F / Duda-Hart guided group-count selection.
//! - [`synth`]: synthetic cohorts with planted signal and known ceilings.
//!
//! Data-parallel loops go through [`par`]; with the default `parallel`
//! feature they run on rayon, otherwise sequentially. Results are identical
//! either way.

pub mod cluster;
pub mod data;
pub mod error;
pub mod features;
pub mod learners;
pub mod linalg;
pub mod par;
pub mod seed;
pub mod selection;
pub mod synth;

pub use error::{Error, Result};
