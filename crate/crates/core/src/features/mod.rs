//! Predictor catalog and design-matrix assembly.
//!
//! A catalog is a JSON list of entries, each naming a derivation family and
//! its parameters. Entries are evaluated in order per person; ratios,
//! interactions and top-code flags may read earlier entries. Missing values
//! are set to zero and every entry that can be missing gets a paired
//! `<name>miss` indicator column, whether or not a given sample has missing
//! values, so the column layout depends only on the catalog.

mod catalog;
mod derive;
mod matrix;
mod policy;
mod series;

pub use catalog::{
    miss_name, ActivityMatch, AmountStat, Catalog, Derivation, Event, Family, FeatureCatalogEntry,
    Quantity, SeifaDirection, Source, Subject, TopCodeRule,
};
pub use derive::{derive_feature, derive_person, Env};
pub use matrix::{build_matrix, expand_interactions, ColumnMeta, FeatureMatrix};
pub use policy::{apply_missing_policy, nearest_rank_quantile, top_code};
pub use series::{bin_count, biweekly_series, fluctuation, window_total, BIN_DAYS};
