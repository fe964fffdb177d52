use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, least_squares, Matrix};

/// Affine predictor `intercept + x'b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub columns: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Columns found collinear with earlier ones and held at zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<String>,
}

impl LinearModel {
    pub fn constant(value: f64) -> Self {
        Self {
            columns: Vec::new(),
            intercept: value,
            coefficients: Vec::new(),
            dropped: Vec::new(),
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.coefficients, x)
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|i| self.predict_row(x.row(i))).collect()
    }

    /// Nonzero coefficients by name.
    pub fn named(&self) -> Vec<(String, f64)> {
        self.columns
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, &b)| b != 0.0)
            .map(|(n, &b)| (n.clone(), b))
            .collect()
    }
}

/// Ordinary least squares with an intercept. Collinear columns are dropped
/// (coefficient 0) and listed in `dropped`.
pub fn ols_fit(x: &Matrix, y: &[f64], columns: &[String]) -> Result<LinearModel> {
    if x.rows() == 0 {
        return Err(Error::invalid("ols needs at least one row"));
    }
    if columns.len() != x.cols() {
        return Err(Error::LengthMismatch {
            left: columns.len(),
            right: x.cols(),
        });
    }
    let ls = least_squares(x, y)?;
    Ok(LinearModel {
        columns: columns.to_vec(),
        intercept: ls.intercept,
        coefficients: ls.coefficients,
        dropped: ls.dropped.iter().map(|&j| columns[j].clone()).collect(),
    })
}
