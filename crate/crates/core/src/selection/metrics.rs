use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::seed;

pub const DEFAULT_BOOTSTRAP: usize = 1000;

pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: yhat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::invalid("mse of an empty sample"));
    }
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

/// Squared Pearson correlation; `None` when either vector has no variance.
pub fn r_squared_corr(y: &[f64], yhat: &[f64]) -> Result<Option<f64>> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: yhat.len(),
        });
    }
    let n = y.len() as f64;
    if y.is_empty() {
        return Ok(None);
    }
    let my = y.iter().sum::<f64>() / n;
    let mp = yhat.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in y.iter().zip(yhat) {
        let (da, db) = (a - my, b - mp);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    // relative variance floor: rounding noise of a constant vector
    let tiny = |ss: f64, m: f64| ss <= 1e-24 * n * (1.0 + m * m);
    if tiny(sxx, my) || tiny(syy, mp) {
        return Ok(None);
    }
    Ok(Some((sxy * sxy / (sxx * syy)).min(1.0)))
}

/// Percentile bootstrap interval for the MSE of fixed predictions.
///
/// Resample `(y, yhat)` pairs with replacement `n_boot` times; the interval
/// is the `(1-level)/2` and `(1+level)/2` empirical quantiles (linear
/// interpolation between order statistics) of the resampled MSEs, widened if
/// needed so that it contains the full-sample MSE.
pub fn bootstrap_ci(y: &[f64], yhat: &[f64], n_boot: usize, level: f64, seed: u64) -> Result<(f64, f64)> {
    let stats = bootstrap_mses(y, yhat, n_boot, seed)?;
    let point = mse(y, yhat)?;
    percentile_interval(&stats, level, point)
}

/// Resampled MSEs, one per replicate, in replicate order.
pub fn bootstrap_mses(y: &[f64], yhat: &[f64], n_boot: usize, seed: u64) -> Result<Vec<f64>> {
    if n_boot < 100 {
        return Err(Error::invalid(format!("need at least 100 bootstrap replicates, got {n_boot}")));
    }
    mse(y, yhat)?;
    let sq: Vec<f64> = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).collect();
    let n = sq.len();
    Ok(par::map_range(n_boot, |b| {
        let mut rng = seed::rng(seed, &[seed::tag("bootstrap"), b as u64]);
        let mut s = 0.0;
        for _ in 0..n {
            s += sq[rng.random_range(0..n)];
        }
        s / n as f64
    }))
}

pub fn percentile_interval(stats: &[f64], level: f64, point: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let mut s = stats.to_vec();
    s.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = p * (s.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        s[lo] + (h - lo as f64) * (s[hi] - s[lo])
    };
    let a = (1.0 - level) / 2.0;
    Ok((q(a).min(point), q(1.0 - a).max(point)))
}

/// Holdout (or in-sample) performance of one prediction vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sample: Sample,
    pub n: usize,
    pub mse: f64,
    /// Absent when either vector is constant.
    pub r_squared: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_bootstrap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sample {
    Train,
    Cv,
    Holdout,
}

impl EvalReport {
    pub fn point(sample: Sample, y: &[f64], yhat: &[f64]) -> Result<Self> {
        Ok(Self {
            sample,
            n: y.len(),
            mse: mse(y, yhat)?,
            r_squared: r_squared_corr(y, yhat)?,
            ci_low: None,
            ci_high: None,
            n_bootstrap: None,
            level: None,
        })
    }

    pub fn with_bootstrap(
        sample: Sample,
        y: &[f64],
        yhat: &[f64],
        n_boot: usize,
        level: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut r = Self::point(sample, y, yhat)?;
        let (lo, hi) = bootstrap_ci(y, yhat, n_boot, level, seed)?;
        r.ci_low = Some(lo);
        r.ci_high = Some(hi);
        r.n_bootstrap = Some(n_boot);
        r.level = Some(level);
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 1.0], &[0.5, 0.5]).unwrap(), 0.25);
        assert!(mse(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn r2_examples() {
        let y = [0.1, 0.4, 0.2, 0.9];
        assert!((r_squared_corr(&y, &y).unwrap().unwrap() - 1.0).abs() < 1e-12);
        let t: Vec<f64> = y.iter().map(|v| 3.0 - 2.0 * v).collect();
        assert!((r_squared_corr(&y, &t).unwrap().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r_squared_corr(&y, &[0.5; 4]).unwrap(), None);
    }

    #[test]
    fn perfect_predictions_give_zero_interval() {
        let y = [0.2, 0.3, 0.9];
        assert_eq!(bootstrap_ci(&y, &y, 200, 0.95, 1).unwrap(), (0.0, 0.0));
        assert!(bootstrap_ci(&y, &y, 50, 0.95, 1).is_err());
    }

    proptest! {
        #[test]
        fn r2_affine_invariant(v in prop::collection::vec(-5.0f64..5.0, 3..30), a in -3.0f64..3.0, b in 0.1f64..4.0) {
            let y: Vec<f64> = v.iter().enumerate().map(|(i, x)| x + (i % 3) as f64).collect();
            let p: Vec<f64> = v.iter().map(|x| x * 0.7 + 0.1).collect();
            let q: Vec<f64> = p.iter().map(|x| a + b * x).collect();
            if let (Some(r1), Some(r2)) = (r_squared_corr(&y, &p).unwrap(), r_squared_corr(&y, &q).unwrap()) {
                prop_assert!((r1 - r2).abs() < 1e-9);
            }
        }

        #[test]
        fn interval_contains_point_and_nests(
            y in prop::collection::vec(0.0f64..1.0, 5..60),
            noise in prop::collection::vec(-0.5f64..0.5, 60),
            seed in 0u64..50,
        ) {
            let yhat: Vec<f64> = y.iter().zip(&noise).map(|(a, e)| a + e).collect();
            let point = mse(&y, &yhat).unwrap();
            let stats = bootstrap_mses(&y, &yhat, 200, seed).unwrap();
            let (l90, h90) = percentile_interval(&stats, 0.90, point).unwrap();
            let (l95, h95) = percentile_interval(&stats, 0.95, point).unwrap();
            prop_assert!(l90 <= point && point <= h90);
            prop_assert!(l95 <= l90 && h90 <= h95);
        }
    }
}
