//! Regression learners and the model artifact.

mod gbt;
mod lasso;
mod linear;
mod probit;
mod stack;
mod svr;

pub use gbt::{gbt_fit, gbt_fit_rows, Binned, GbtParams, Node, Tree, TreeEnsemble};
pub use lasso::{
    fit_standardized, lasso_fit, lasso_fit_warm, lasso_path, post_lasso_ols, Moments, SparseLinearModel,
    Standardization, Standardized, LASSO_MAX_SWEEPS, LASSO_TOL,
};
pub use linear::{ols_fit, LinearModel};
pub use probit::{fractional_probit_fit, norm_cdf, ProbitModel};
pub use stack::{stack_ensemble, StackWeights};
pub use svr::{
    assemble as assemble_svr, distance_matrix, kernel_from_distances, solve_dual, sqdist, svr_fit, DualSolution,
    KernelModel, SubsampleRecord, SvrHyperParams, SvrOptions, UnitScaling,
};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::Matrix;

/// Any fitted model, tagged by kind in its JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum TrainedModel {
    Linear(LinearModel),
    SparseLinear(SparseLinearModel),
    Kernel(KernelModel),
    TreeEnsemble(TreeEnsemble),
    Probit(ProbitModel),
    Stacked(StackedModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedModel {
    pub components: Vec<TrainedModel>,
    pub blend: StackWeights,
}

impl StackedModel {
    pub fn new(components: Vec<TrainedModel>, blend: StackWeights) -> Result<Self> {
        if components.len() != blend.weights.len() {
            return Err(Error::LengthMismatch {
                left: components.len(),
                right: blend.weights.len(),
            });
        }
        Ok(Self { components, blend })
    }
}

impl TrainedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::Linear(_) => "linear",
            TrainedModel::SparseLinear(_) => "sparse-linear",
            TrainedModel::Kernel(_) => "kernel",
            TrainedModel::TreeEnsemble(_) => "tree-ensemble",
            TrainedModel::Probit(_) => "probit",
            TrainedModel::Stacked(_) => "stacked",
        }
    }

    /// Training columns, in the order the model reads them. A stacked model
    /// needs the union of its components' columns.
    pub fn columns(&self) -> Vec<String> {
        match self {
            TrainedModel::Linear(m) => m.columns.clone(),
            TrainedModel::SparseLinear(m) => m.columns.clone(),
            TrainedModel::Kernel(m) => m.columns.clone(),
            TrainedModel::TreeEnsemble(m) => m.columns.clone(),
            TrainedModel::Probit(m) => m.index.columns.clone(),
            TrainedModel::Stacked(m) => {
                let mut out: Vec<String> = Vec::new();
                for c in &m.components {
                    for name in c.columns() {
                        if !out.contains(&name) {
                            out.push(name);
                        }
                    }
                }
                out
            }
        }
    }

    /// Predict from a matrix whose columns are exactly `self.columns()`.
    pub fn predict_matrix(&self, x: &Matrix) -> Vec<f64> {
        match self {
            TrainedModel::Linear(m) => m.predict(x),
            TrainedModel::SparseLinear(m) => m.predict(x),
            TrainedModel::Kernel(m) => m.predict(x),
            TrainedModel::TreeEnsemble(m) => m.predict(x),
            TrainedModel::Probit(m) => m.predict(x),
            TrainedModel::Stacked(_) => unreachable!("stacked models predict by column name"),
        }
    }

    /// Predict for every row of `m`, selecting the model's columns by name.
    pub fn predict(&self, m: &FeatureMatrix) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Stacked(s) => {
                let preds = s
                    .components
                    .iter()
                    .map(|c| c.predict(m))
                    .collect::<Result<Vec<_>>>()?;
                Ok(s.blend.combine(&preds))
            }
            other => {
                let x = m.select(&other.columns())?;
                Ok(other.predict_matrix(&x))
            }
        }
    }

    /// Predictors by importance: absolute coefficient for linear models,
    /// post-selection coefficient for LASSO, influence for boosting. Kernel
    /// models have none; a stacked model uses its first ranked component.
    pub fn ranking(&self) -> Vec<(String, f64)> {
        let by_size = |mut v: Vec<(String, f64)>| {
            v.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
            v
        };
        match self {
            TrainedModel::Linear(m) => by_size(m.named()),
            TrainedModel::Probit(m) => by_size(m.index.named()),
            TrainedModel::SparseLinear(m) => m.ranked(),
            TrainedModel::TreeEnsemble(m) => by_size(m.influence()).into_iter().filter(|(_, v)| *v > 0.0).collect(),
            TrainedModel::Kernel(_) => Vec::new(),
            TrainedModel::Stacked(s) => s
                .components
                .iter()
                .map(|c| c.ranking())
                .find(|r| !r.is_empty())
                .unwrap_or_default(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&s)?)
    }
}
