//! Hierarchical clustering of people predicted to stay on income support.
//!
//! Inputs are rescaled to [0, 1], merged bottom-up under Ward, average or
//! complete linkage, and the tree is cut at a group count chosen by the
//! Calinski-Harabasz pseudo-F with Duda-Hart statistics alongside.

mod hierarchy;
mod indices;
mod summary;

pub use hierarchy::{agglomerate, cut, distances, rescale_unit, Dendrogram, Linkage, Merge};
pub use indices::{
    calinski_harabasz, duda_hart, select_k, ss_decomposition, within_ss, DudaHart, IndexValue, KRow, KSelection, PROMINENCE,
};
pub use summary::{group_summary, ClusterReport, GroupSummary, DEFAULT_MIN_GROUP};

/// Default cut-off on the predicted outcome for the clustering sample.
pub const DEFAULT_AT_RISK: f64 = 0.9;

/// Rows whose prediction exceeds `threshold`.
pub fn at_risk_rows(predictions: &[f64], threshold: f64) -> Vec<usize> {
    predictions
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > threshold)
        .map(|(i, _)| i)
        .collect()
}
