//! Five-fold grid search on the training split.
//!
//! Every grid cell is scored by the average over folds of the held-fold MSE
//! of a model trained on the other folds. The selected cell has the lowest
//! score; exact ties go to the cell listed first, and cells are listed from
//! strongest to weakest regularisation. A cell that fails in any fold is
//! dropped with a warning.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::grid::{Axis, GridSpec};
use super::metrics::mse;
use super::split::SplitPlan;
use crate::error::{Error, Result};
use crate::learners::{
    distance_matrix, gbt_fit_rows, kernel_from_distances, solve_dual, Binned, GbtParams, Moments, Standardized,
    SvrOptions, UnitScaling,
};
use crate::linalg::Matrix;
use crate::par;
use crate::seed;

pub const DEFAULT_SVR_ROWS: usize = 2000;
pub const DEFAULT_SHRINKAGE: f64 = 1.0;
pub const DEFAULT_BAG: f64 = 0.8;

/// Learner of a ladder entry, with its fixed (non-grid) settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "kebab-case")]
pub enum LearnerSpec {
    Ols,
    Probit,
    Lasso,
    Svr {
        /// Training rows used by the kernel fit; larger training sets are
        /// subsampled.
        #[serde(default = "default_svr_rows")]
        max_rows: usize,
    },
    Boosting {
        #[serde(default = "default_shrinkage")]
        shrinkage: f64,
        #[serde(default = "default_bag")]
        bag_fraction: f64,
    },
    Ensemble {
        components: Vec<String>,
    },
}

fn default_svr_rows() -> usize {
    DEFAULT_SVR_ROWS
}
fn default_shrinkage() -> f64 {
    DEFAULT_SHRINKAGE
}
fn default_bag() -> f64 {
    DEFAULT_BAG
}

impl LearnerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerSpec::Ols => "ols",
            LearnerSpec::Probit => "probit",
            LearnerSpec::Lasso => "lasso",
            LearnerSpec::Svr { .. } => "svr",
            LearnerSpec::Boosting { .. } => "boosting",
            LearnerSpec::Ensemble { .. } => "ensemble",
        }
    }

    pub fn hyperparameters(&self) -> &'static [&'static str] {
        match self {
            LearnerSpec::Lasso => &["lambda"],
            LearnerSpec::Svr { .. } => &["c", "gamma", "epsilon"],
            LearnerSpec::Boosting { .. } => &["splits", "trees"],
            _ => &[],
        }
    }

    /// Check the grid against the learner; every hyperparameter needs an axis.
    pub fn validate_grid(&self, grid: &GridSpec) -> Result<()> {
        grid.validate_for(self.name(), self.hyperparameters())?;
        for p in self.hyperparameters() {
            if grid.axis(p).is_none() {
                return Err(Error::Config(format!("{} grid needs an axis for {p}", self.name())));
            }
        }
        if let LearnerSpec::Boosting {
            shrinkage,
            bag_fraction,
        } = *self
        {
            GbtParams {
                max_splits: 1,
                n_trees: 1,
                shrinkage,
                bag_fraction,
                seed: 0,
            }
            .validate()?;
        }
        if let LearnerSpec::Svr { max_rows } = *self {
            if max_rows < 10 {
                return Err(Error::Config("svr max_rows must be at least 10".into()));
            }
        }
        Ok(())
    }
}

/// One grid cell and its cross-validated score (`None` if it failed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub params: BTreeMap<String, f64>,
    pub mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    /// Strongest regularisation first.
    pub cells: Vec<CvCell>,
    pub selected: usize,
}

impl CvResult {
    fn new(cells: Vec<CvCell>) -> Result<Self> {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in cells.iter().enumerate() {
            match c.mse {
                Some(m) if best.is_none_or(|(_, b)| m < b) => best = Some((i, m)),
                Some(_) => {}
                None => log::warn!("grid cell {:?} failed in at least one fold; excluded", c.params),
            }
        }
        let (selected, _) =
            best.ok_or_else(|| Error::invalid("every grid cell failed during cross-validation"))?;
        Ok(Self { cells, selected })
    }

    pub fn best(&self) -> &CvCell {
        &self.cells[self.selected]
    }

    pub fn param(&self, name: &str) -> f64 {
        self.best().params[name]
    }

    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| c.mse.is_none()).count()
    }
}

fn cell(pairs: &[(&str, f64)], fold_mse: &[Option<f64>]) -> CvCell {
    let mse = if fold_mse.iter().all(Option::is_some) {
        Some(fold_mse.iter().map(|m| m.unwrap()).sum::<f64>() / fold_mse.len() as f64)
    } else {
        None
    };
    CvCell {
        params: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        mse,
    }
}

fn held_mse(y: &[f64], rows: &[usize], pred: impl Fn(usize) -> f64) -> Option<f64> {
    let yy: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    let pp: Vec<f64> = rows.iter().map(|&i| pred(i)).collect();
    mse(&yy, &pp).ok().filter(|m| m.is_finite())
}

/// Cross-product moments of each fold; training moments of a fold are the
/// total minus the fold.
pub struct FoldMoments {
    pub folds: Vec<Moments>,
    pub total: Moments,
}

impl FoldMoments {
    pub fn new(x: &Matrix, y: &[f64], plan: &SplitPlan) -> Self {
        let folds: Vec<Moments> = (0..plan.n_folds)
            .map(|f| Moments::of_rows(x, y, &plan.fold_rows(f).1))
            .collect();
        let mut total = Moments::zeros(x.cols());
        for m in &folds {
            total.add(m);
        }
        Self { folds, total }
    }

    pub fn training(&self, f: usize) -> Moments {
        let mut m = self.total.clone();
        m.sub(&self.folds[f]);
        m
    }
}

/// LASSO over `lambdas`, one warm-started path per fold.
pub fn cv_lasso(x: &Matrix, y: &[f64], plan: &SplitPlan, fm: &FoldMoments, lambdas: &[f64]) -> Result<CvResult> {
    let mut order: Vec<f64> = lambdas.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    order.dedup();
    let per_fold: Vec<Vec<Option<f64>>> = par::map_range(plan.n_folds, |f| {
        let held = plan.fold_rows(f).1;
        let s = match Standardized::from_moments(&fm.training(f)) {
            Ok(s) => s,
            Err(_) => return vec![None; order.len()],
        };
        let mut beta = vec![0.0; s.k()];
        order
            .iter()
            .map(|&l| {
                s.descend(&mut beta, l, None).ok()?;
                let (a, b) = s.to_original(&beta);
                let support: Vec<usize> = (0..b.len()).filter(|&j| b[j] != 0.0).collect();
                held_mse(y, &held, |i| {
                    let r = x.row(i);
                    a + support.iter().map(|&j| b[j] * r[j]).sum::<f64>()
                })
            })
            .collect()
    });
    let cells = order
        .iter()
        .enumerate()
        .map(|(c, &l)| {
            let folds: Vec<Option<f64>> = per_fold.iter().map(|v| v[c]).collect();
            cell(&[("lambda", l)], &folds)
        })
        .collect();
    CvResult::new(cells)
}

/// Kernel-regression search state: the (sub)sample, its scaling and
/// pairwise distances, reused by the final fit.
pub struct SvrCv {
    pub result: CvResult,
    /// Rows of `x` used, ascending.
    pub rows: Vec<usize>,
    pub scaling: UnitScaling,
    pub z: Matrix,
    pub distances: Vec<f64>,
}

/// Training rows for a kernel fit: all of them, or a seeded subsample of
/// `max_rows`.
pub fn svr_rows(plan: &SplitPlan, max_rows: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n = plan.train.len();
    if n <= max_rows {
        return (plan.train.clone(), plan.folds.clone());
    }
    let mut rng = seed::rng(seed, &[seed::tag("svr-subsample")]);
    let mut pick = sample(&mut rng, n, max_rows).into_vec();
    pick.sort_unstable();
    (
        pick.iter().map(|&k| plan.train[k]).collect(),
        pick.iter().map(|&k| plan.folds[k]).collect(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn cv_svr(
    x: &Matrix,
    y: &[f64],
    plan: &SplitPlan,
    cs: &[f64],
    gammas: &[f64],
    epsilons: &[f64],
    max_rows: usize,
    seed: u64,
    opts: &SvrOptions,
) -> Result<SvrCv> {
    let (rows, folds) = svr_rows(plan, max_rows, seed);
    let m = rows.len();
    let sub = x.select_rows(&rows);
    let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    let scaling = UnitScaling::fit(&sub);
    let z = scaling.apply(&sub);
    let distances = distance_matrix(&z);
    let parts: Vec<(Vec<usize>, Vec<usize>)> = (0..plan.n_folds)
        .map(|f| ((0..m).filter(|&i| folds[i] != f).collect(), (0..m).filter(|&i| folds[i] == f).collect()))
        .collect();
    // strongest first: small C, small gamma, wide tube
    let mut cs = cs.to_vec();
    let mut gammas = gammas.to_vec();
    let mut eps = epsilons.to_vec();
    cs.sort_by(f64::total_cmp);
    gammas.sort_by(f64::total_cmp);
    eps.sort_by(|a, b| b.total_cmp(a));
    let mut scores: BTreeMap<(usize, usize, usize), Vec<Option<f64>>> = BTreeMap::new();
    for (gi, &g) in gammas.iter().enumerate() {
        let kern = kernel_from_distances(&distances, g);
        for (f, (tr, held)) in parts.iter().enumerate() {
            let kt = sub_kernel(&kern, m, tr);
            let yt: Vec<f64> = tr.iter().map(|&i| ys[i]).collect();
            let tasks: Vec<(usize, usize)> = (0..cs.len()).flat_map(|a| (0..eps.len()).map(move |b| (a, b))).collect();
            let out = par::map_slice(&tasks, |&(ci, ei)| {
                let sol = solve_dual(&kt, &yt, cs[ci], eps[ei], opts).ok()?;
                let sv: Vec<usize> = (0..tr.len()).filter(|&t| sol.coef[t] != 0.0).collect();
                held_mse(&ys, held, |h| {
                    let row = &kern[h * m..(h + 1) * m];
                    sol.bias + sv.iter().map(|&t| sol.coef[t] * row[tr[t]]).sum::<f64>()
                })
            });
            for (&(ci, ei), r) in tasks.iter().zip(out) {
                scores.entry((ci, gi, ei)).or_insert_with(|| vec![None; plan.n_folds])[f] = r;
            }
        }
    }
    let cells = scores
        .iter()
        .map(|(&(ci, gi, ei), folds)| cell(&[("c", cs[ci]), ("gamma", gammas[gi]), ("epsilon", eps[ei])], folds))
        .collect();
    Ok(SvrCv {
        result: CvResult::new(cells)?,
        rows,
        scaling,
        z,
        distances,
    })
}

/// Rows and columns `idx` of a square `m x m` matrix.
pub fn sub_kernel(kern: &[f64], m: usize, idx: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(idx.len() * idx.len());
    for &i in idx {
        let row = &kern[i * m..(i + 1) * m];
        out.extend(idx.iter().map(|&j| row[j]));
    }
    out
}

/// Seed of the boosting run for a split count and fold.
pub fn boosting_seed(master: u64, splits: usize, fold: Option<usize>) -> u64 {
    match fold {
        Some(f) => seed::derive(master, &[seed::tag("boosting"), splits as u64, f as u64]),
        None => seed::derive(master, &[seed::tag("boosting-final"), splits as u64]),
    }
}

/// Boosting over split counts and tree counts. One run per (split count,
/// fold) grows the largest tree count and scores every prefix.
#[allow(clippy::too_many_arguments)]
pub fn cv_gbt(
    b: &Binned,
    x: &Matrix,
    y: &[f64],
    plan: &SplitPlan,
    splits: &[usize],
    trees: &[usize],
    shrinkage: f64,
    bag_fraction: f64,
    seed: u64,
) -> Result<CvResult> {
    let max_trees = *trees.iter().max().ok_or_else(|| Error::Config("empty tree grid".into()))?;
    let tasks: Vec<(usize, usize)> = splits
        .iter()
        .flat_map(|&s| (0..plan.n_folds).map(move |f| (s, f)))
        .collect();
    let curves: Vec<Option<Vec<f64>>> = par::map_slice(&tasks, |&(s, f)| {
        let (rest, held) = plan.fold_rows(f);
        let p = GbtParams {
            max_splits: s,
            n_trees: max_trees,
            shrinkage,
            bag_fraction,
            seed: boosting_seed(seed, s, Some(f)),
        };
        let init = rest.iter().map(|&i| y[i]).sum::<f64>() / rest.len().max(1) as f64;
        let mut pred = vec![init; held.len()];
        let mut curve = Vec::with_capacity(max_trees);
        gbt_fit_rows(b, x, y, &rest, &p, &[], |_, tree| {
            let mut ss = 0.0;
            for (k, &i) in held.iter().enumerate() {
                pred[k] += shrinkage * tree.predict_row(x.row(i));
                ss += (y[i] - pred[k]).powi(2);
            }
            curve.push(ss / held.len().max(1) as f64);
        })
        .ok()?;
        Some(curve)
    });
    let mut cells = Vec::with_capacity(splits.len() * trees.len());
    for (si, &s) in splits.iter().enumerate() {
        for &t in trees {
            let folds: Vec<Option<f64>> = (0..plan.n_folds)
                .map(|f| curves[si * plan.n_folds + f].as_ref().map(|c| c[t - 1]))
                .collect();
            cells.push(cell(&[("splits", s as f64), ("trees", t as f64)], &folds));
        }
    }
    CvResult::new(cells)
}

/// Values of a grid axis that depends on no reference value.
pub fn fixed_values(grid: &GridSpec, name: &str) -> Result<Vec<f64>> {
    grid.axis(name)
        .ok_or_else(|| Error::Config(format!("grid has no axis {name}")))?
        .values(None)
}

/// Grid search for a single-model learner on the training rows of `plan`.
/// Learners without hyperparameters return `None`.
pub fn cross_validate(
    spec: &LearnerSpec,
    grid: &GridSpec,
    plan: &SplitPlan,
    x: &Matrix,
    y: &[f64],
    seed: u64,
) -> Result<Option<CvResult>> {
    spec.validate_grid(grid)?;
    match *spec {
        LearnerSpec::Lasso => {
            let fm = FoldMoments::new(x, y, plan);
            let lambdas = lasso_grid(grid, &fm)?;
            cv_lasso(x, y, plan, &fm, &lambdas).map(Some)
        }
        LearnerSpec::Svr { max_rows } => cv_svr(
            x,
            y,
            plan,
            &fixed_values(grid, "c")?,
            &fixed_values(grid, "gamma")?,
            &fixed_values(grid, "epsilon")?,
            max_rows,
            seed,
            &SvrOptions::default(),
        )
        .map(|r| Some(r.result)),
        LearnerSpec::Boosting {
            shrinkage,
            bag_fraction,
        } => {
            let b = Binned::new(x);
            let splits = grid.axis("splits").unwrap().integer_values("splits")?;
            let trees = grid.axis("trees").unwrap().integer_values("trees")?;
            cv_gbt(&b, x, y, plan, &splits, &trees, shrinkage, bag_fraction, seed).map(Some)
        }
        LearnerSpec::Ols | LearnerSpec::Probit | LearnerSpec::Ensemble { .. } => Ok(None),
    }
}

/// Lambda values, resolving a relative axis against the training sample.
pub fn lasso_grid(grid: &GridSpec, fm: &FoldMoments) -> Result<Vec<f64>> {
    let axis = grid
        .axis("lambda")
        .ok_or_else(|| Error::Config("lasso grid needs an axis for lambda".into()))?;
    let reference = match axis {
        Axis::Relative { .. } => Some(Standardized::from_moments(&fm.total)?.lambda_max()),
        _ => None,
    };
    axis.values(reference)
}

#[cfg(test)]
mod tests {
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::super::grid::Spacing;
    use super::super::split::split_train_holdout;
    use super::*;

    fn toy(n: usize, k: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = seed::rng(seed, &[]);
        let mut x = Matrix::zeros(n, k);
        let mut y = vec![0.0; n];
        for i in 0..n {
            for j in 0..k {
                x.set(i, j, rng.random::<f64>());
            }
            let e: f64 = StandardNormal.sample(&mut rng);
            y[i] = 2.0 * x.get(i, 0) - x.get(i, 1) + (6.0 * x.get(i, 2)).sin() * 0.5 + 0.1 * e;
        }
        (x, y)
    }

    fn brute_lasso(x: &Matrix, y: &[f64], plan: &SplitPlan, l: f64) -> f64 {
        let mut total = 0.0;
        for f in 0..plan.n_folds {
            let (rest, held) = plan.fold_rows(f);
            let s = Standardized::from_moments(&Moments::of_rows(x, y, &rest)).unwrap();
            let mut beta = vec![0.0; s.k()];
            s.descend(&mut beta, l, None).unwrap();
            let (a, b) = s.to_original(&beta);
            let ss: f64 = held
                .iter()
                .map(|&i| (y[i] - a - x.row(i).iter().zip(&b).map(|(u, v)| u * v).sum::<f64>()).powi(2))
                .sum();
            total += ss / held.len() as f64;
        }
        total / plan.n_folds as f64
    }

    #[test]
    fn lasso_cells_match_cold_fits() {
        let (x, y) = toy(120, 6, 3);
        let plan = split_train_holdout(120, 0.8, 9).unwrap();
        let grid: GridSpec = serde_json::from_str(r#"{"lambda": {"min_ratio": 1e-3, "count": 8}}"#).unwrap();
        let r = cross_validate(&LearnerSpec::Lasso, &grid, &plan, &x, &y, 1).unwrap().unwrap();
        assert_eq!(r.cells.len(), 8);
        // strongest first
        assert!(r.cells.windows(2).all(|w| w[0].params["lambda"] > w[1].params["lambda"]));
        for c in &r.cells {
            let want = brute_lasso(&x, &y, &plan, c.params["lambda"]);
            assert!((c.mse.unwrap() - want).abs() < 1e-6 * (1.0 + want));
        }
        let min = r.cells.iter().filter_map(|c| c.mse).fold(f64::INFINITY, f64::min);
        assert_eq!(r.best().mse, Some(min));
    }

    #[test]
    fn ties_go_to_the_first_cell() {
        let mk = |v: f64| CvCell {
            params: BTreeMap::new(),
            mse: Some(v),
        };
        let r = CvResult::new(vec![mk(0.3), mk(0.2), mk(0.2), mk(0.25)]).unwrap();
        assert_eq!(r.selected, 1);
        let failed = CvCell {
            params: BTreeMap::new(),
            mse: None,
        };
        let r = CvResult::new(vec![failed.clone(), mk(0.5)]).unwrap();
        assert_eq!((r.selected, r.failed()), (1, 1));
        assert!(CvResult::new(vec![failed]).is_err());
    }

    #[test]
    fn boosting_curves_match_direct_fits() {
        let (x, y) = toy(100, 3, 5);
        let plan = split_train_holdout(100, 0.8, 2).unwrap();
        let b = Binned::new(&x);
        let r = cv_gbt(&b, &x, &y, &plan, &[1, 3], &[1, 2, 5], 1.0, 0.8, 7).unwrap();
        assert_eq!(r.cells.len(), 6);
        for c in &r.cells {
            let (s, t) = (c.params["splits"] as usize, c.params["trees"] as usize);
            let mut total = 0.0;
            for f in 0..plan.n_folds {
                let (rest, held) = plan.fold_rows(f);
                let p = GbtParams {
                    max_splits: s,
                    n_trees: t,
                    shrinkage: 1.0,
                    bag_fraction: 0.8,
                    seed: boosting_seed(7, s, Some(f)),
                };
                let m = gbt_fit_rows(&b, &x, &y, &rest, &p, &[], |_, _| {}).unwrap();
                let ss: f64 = held.iter().map(|&i| (y[i] - m.predict_row(x.row(i))).powi(2)).sum();
                total += ss / held.len() as f64;
            }
            assert!((c.mse.unwrap() - total / 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn svr_grid_runs_on_subsample() {
        let (x, y) = toy(150, 3, 8);
        let plan = split_train_holdout(150, 0.8, 4).unwrap();
        let axis = |min, max| Axis::Range {
            min,
            max,
            count: 2,
            spacing: Spacing::Geometric,
        };
        let r = cv_svr(
            &x,
            &y,
            &plan,
            &axis(0.1, 1.0).values(None).unwrap(),
            &axis(0.5, 5.0).values(None).unwrap(),
            &axis(0.01, 0.1).values(None).unwrap(),
            60,
            3,
            &SvrOptions::default(),
        )
        .unwrap();
        assert_eq!(r.rows.len(), 60);
        assert_eq!(r.result.cells.len(), 8);
        assert!(r.result.cells.iter().all(|c| c.mse.unwrap() >= 0.0));
        assert_eq!(r.result.cells[0].params["c"], 0.1);
        assert_eq!(r.result.cells[0].params["epsilon"], 0.1);
    }

    #[test]
    fn grid_must_fit_learner() {
        let (x, y) = toy(30, 3, 1);
        let plan = split_train_holdout(30, 0.8, 1).unwrap();
        let grid: GridSpec = serde_json::from_str(r#"{"c": [1.0]}"#).unwrap();
        assert!(cross_validate(&LearnerSpec::Lasso, &grid, &plan, &x, &y, 1).is_err());
        assert!(cross_validate(&LearnerSpec::Lasso, &GridSpec::default(), &plan, &x, &y, 1).is_err());
        assert_eq!(cross_validate(&LearnerSpec::Ols, &GridSpec::default(), &plan, &x, &y, 1).unwrap(), None);
    }
}
