use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{least_squares, Matrix};

/// Linear blend of component predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackWeights {
    pub intercept: f64,
    pub weights: Vec<f64>,
}

impl StackWeights {
    pub fn combine(&self, preds: &[Vec<f64>]) -> Vec<f64> {
        let n = preds.first().map_or(0, Vec::len);
        (0..n)
            .map(|i| self.intercept + self.weights.iter().zip(preds).map(|(w, p)| w * p[i]).sum::<f64>())
            .collect()
    }
}

/// OLS of `y` on the component prediction vectors, with an intercept and
/// unconstrained weights. Collinear components get weight 0.
pub fn stack_ensemble(preds: &[Vec<f64>], y: &[f64]) -> Result<StackWeights> {
    if preds.is_empty() {
        return Err(Error::invalid("stacking needs at least one component"));
    }
    for p in preds {
        if p.len() != y.len() {
            return Err(Error::LengthMismatch { left: p.len(), right: y.len() });
        }
    }
    let x = Matrix::from_columns(preds, y.len())?;
    let ls = least_squares(&x, y)?;
    Ok(StackWeights {
        intercept: ls.intercept,
        weights: ls.coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_component() {
        let y = vec![0.1, 0.5, 0.9, 0.3];
        let w = stack_ensemble(&[y.clone()], &y).unwrap();
        assert!((w.weights[0] - 1.0).abs() < 1e-12);
        assert!(w.intercept.abs() < 1e-12);
    }

    #[test]
    fn average_of_two() {
        let p1 = vec![0.0, 1.0, 0.2, 0.7, 0.4];
        let p2 = vec![0.6, 0.1, 0.9, 0.3, 0.8];
        let y: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| (a + b) / 2.0).collect();
        let w = stack_ensemble(&[p1, p2], &y).unwrap();
        assert!((w.weights[0] - 0.5).abs() < 1e-12);
        assert!((w.weights[1] - 0.5).abs() < 1e-12);
        assert!(w.intercept.abs() < 1e-12);
    }

    #[test]
    fn needs_components() {
        assert!(stack_ensemble(&[], &[1.0]).is_err());
    }
}
