use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const N_FOLDS: usize = 5;

/// Train/holdout partition with fold labels for the training rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub n: usize,
    /// Training rows, ascending.
    pub train: Vec<usize>,
    /// Holdout rows, ascending.
    pub holdout: Vec<usize>,
    /// Fold (0-based) of each entry of `train`.
    pub folds: Vec<usize>,
    pub n_folds: usize,
}

/// Shuffle `0..n` with the seed, send the first `ceil(ratio * n)` rows to
/// training and deal them round-robin into folds, so fold sizes differ by
/// at most one.
pub fn split_train_holdout(n: usize, ratio: f64, seed: u64) -> Result<SplitPlan> {
    split_with_folds(n, ratio, seed, N_FOLDS)
}

pub fn split_with_folds(n: usize, ratio: f64, seed: u64, n_folds: usize) -> Result<SplitPlan> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 rows to split, got {n}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("train ratio must lie in (0, 1), got {ratio}")));
    }
    if n_folds < 2 {
        return Err(Error::invalid("need at least 2 folds"));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed::rng(seed, &[seed::tag("split")]));
    let n_train = ((ratio * n as f64 - 1e-9).ceil() as usize).clamp(1, n - 1);
    let mut train: Vec<(usize, usize)> = perm[..n_train]
        .iter()
        .enumerate()
        .map(|(pos, &row)| (row, pos % n_folds))
        .collect();
    train.sort_unstable();
    let mut holdout = perm[n_train..].to_vec();
    holdout.sort_unstable();
    Ok(SplitPlan {
        seed,
        n,
        folds: train.iter().map(|t| t.1).collect(),
        train: train.into_iter().map(|t| t.0).collect(),
        holdout,
        n_folds,
    })
}

impl SplitPlan {
    /// Training rows of fold `f` (held out) and of the other folds.
    pub fn fold_rows(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        let mut held = Vec::new();
        let mut rest = Vec::new();
        for (&row, &g) in self.train.iter().zip(&self.folds) {
            if g == f {
                held.push(row);
            } else {
                rest.push(row);
            }
        }
        (rest, held)
    }

    /// The same plan restricted to rows where `keep` holds. Fold labels are
    /// kept as they are.
    pub fn restrict(&self, keep: &[bool]) -> SplitPlan {
        let (train, folds) = self
            .train
            .iter()
            .zip(&self.folds)
            .filter(|(&r, _)| keep[r])
            .map(|(&r, &f)| (r, f))
            .unzip();
        SplitPlan {
            seed: self.seed,
            n: self.n,
            train,
            holdout: self.holdout.iter().copied().filter(|&r| keep[r]).collect(),
            folds,
            n_folds: self.n_folds,
        }
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_folds];
        for &f in &self.folds {
            s[f] += 1;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn ten_rows() {
        let p = split_train_holdout(10, 0.8, 1).unwrap();
        assert_eq!((p.train.len(), p.holdout.len()), (8, 2));
        let mut s = p.fold_sizes();
        s.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(s, vec![2, 2, 2, 1, 1]);
        assert_eq!(p, split_train_holdout(10, 0.8, 1).unwrap());
        assert_ne!(p, split_train_holdout(10, 0.8, 2).unwrap());
    }

    #[test]
    fn bad_input() {
        assert!(split_train_holdout(1, 0.8, 1).is_err());
        assert!(split_train_holdout(10, 1.0, 1).is_err());
        assert!(split_train_holdout(10, 0.0, 1).is_err());
    }

    proptest! {
        #[test]
        fn partitions(n in 2usize..400, ratio in 0.05f64..0.95, seed in 0u64..1000) {
            let p = split_train_holdout(n, ratio, seed).unwrap();
            let mut all: Vec<usize> = p.train.iter().chain(&p.holdout).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let s = p.fold_sizes();
            prop_assert!(s.iter().max().unwrap() - s.iter().min().unwrap() <= 1);
            let mut union = Vec::new();
            for f in 0..p.n_folds {
                let (rest, held) = p.fold_rows(f);
                prop_assert_eq!(rest.len() + held.len(), p.train.len());
                union.extend(held);
            }
            union.sort_unstable();
            prop_assert_eq!(union, p.train.clone());
        }
    }
}
