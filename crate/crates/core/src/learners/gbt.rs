//! Least-squares gradient boosting with small regression trees.
//!
//! Trees grow best-first: the leaf whose best split removes the most squared
//! error is split next, until `max_splits` internal nodes exist or no split
//! helps. Split search is exhaustive over every column and every midpoint
//! between consecutive distinct values present in the node, using exact
//! per-value histograms (one bin per distinct training value) with sibling
//! subtraction. Ties go to the lowest column, then the lowest threshold,
//! then the earliest leaf.

use std::collections::HashMap;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::par;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub max_splits: usize,
    pub n_trees: usize,
    pub shrinkage: f64,
    pub bag_fraction: f64,
    pub seed: u64,
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_splits < 1 || self.n_trees < 1 {
            return Err(Error::invalid("boosting needs max_splits >= 1 and n_trees >= 1"));
        }
        if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            return Err(Error::invalid("shrinkage must lie in (0, 1]"));
        }
        if !(self.bag_fraction > 0.0 && self.bag_fraction <= 1.0) {
            return Err(Error::invalid("bag fraction must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Squared-error reduction on the bag.
        gain: f64,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub columns: Vec<String>,
    pub initial: f64,
    pub shrinkage: f64,
    pub bag_fraction: f64,
    pub max_splits: usize,
    pub seed: u64,
    pub trees: Vec<Tree>,
}

impl TreeEnsemble {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.initial + self.trees.iter().map(|t| self.shrinkage * t.predict_row(x)).sum::<f64>()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        par::map_range(x.rows(), |i| self.predict_row(x.row(i)))
    }

    /// Per-column share of total squared-error reduction, scaled to sum to
    /// 100. All zeros when no tree splits.
    pub fn influence(&self) -> Vec<(String, f64)> {
        let mut g = vec![0.0; self.columns.len()];
        for t in &self.trees {
            for n in &t.nodes {
                if let Node::Split { feature, gain, .. } = n {
                    g[*feature] += gain;
                }
            }
        }
        let total: f64 = g.iter().sum();
        self.columns
            .iter()
            .zip(g)
            .map(|(c, v)| (c.clone(), if total > 0.0 { 100.0 * v / total } else { 0.0 }))
            .collect()
    }
}

/// Columns mapped to indices of their sorted distinct values.
pub struct Binned {
    /// Sorted distinct values per column.
    values: Vec<Vec<f64>>,
    /// Bin index per (column, row).
    bins: Vec<Vec<u32>>,
    /// Columns worth searching: not constant and not a copy of an earlier one.
    active: Vec<usize>,
    offsets: Vec<usize>,
    total_bins: usize,
}

impl Binned {
    pub fn new(x: &Matrix) -> Self {
        let n = x.rows();
        let k = x.cols();
        let per_col: Vec<(Vec<f64>, Vec<u32>)> = par::map_range(k, |j| {
            // adding 0.0 folds -0.0 into 0.0 so total_cmp agrees with dedup
            let col: Vec<f64> = x.column(j).into_iter().map(|v| v + 0.0).collect();
            let mut vals = col.clone();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            let bins = col
                .iter()
                .map(|v| vals.binary_search_by(|p| p.total_cmp(v)).expect("present") as u32)
                .collect();
            (vals, bins)
        });
        let (values, bins): (Vec<_>, Vec<_>) = per_col.into_iter().unzip();
        let mut seen: HashMap<(&[u32], Vec<u64>), usize> = HashMap::new();
        let mut active = Vec::new();
        for j in 0..k {
            if values[j].len() < 2 || n < 2 {
                continue;
            }
            let key = (bins[j].as_slice(), values[j].iter().map(|v| v.to_bits()).collect());
            if seen.contains_key(&key) {
                continue;
            }
            seen.insert(key, j);
            active.push(j);
        }
        let mut offsets = Vec::with_capacity(active.len());
        let mut total_bins = 0;
        for &j in &active {
            offsets.push(total_bins);
            total_bins += values[j].len();
        }
        Self {
            values,
            bins,
            active,
            offsets,
            total_bins,
        }
    }

    pub fn active_columns(&self) -> &[usize] {
        &self.active
    }
}

#[derive(Clone)]
struct Hist {
    sum: Vec<f64>,
    cnt: Vec<u32>,
}

impl Hist {
    fn build(b: &Binned, rows: &[usize], r: &[f64]) -> Self {
        let mut sum = vec![0.0; b.total_bins];
        let mut cnt = vec![0u32; b.total_bins];
        for (a, &j) in b.active.iter().enumerate() {
            let off = b.offsets[a];
            let bins = &b.bins[j];
            for &i in rows {
                let t = off + bins[i] as usize;
                sum[t] += r[i];
                cnt[t] += 1;
            }
        }
        Self { sum, cnt }
    }

    fn minus(&self, o: &Hist) -> Hist {
        Hist {
            sum: self.sum.iter().zip(&o.sum).map(|(a, b)| a - b).collect(),
            cnt: self.cnt.iter().zip(&o.cnt).map(|(a, b)| a - b).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn best_split(b: &Binned, h: &Hist, total: f64, count: usize, min_gain: f64) -> Option<Candidate> {
    if count < 2 {
        return None;
    }
    let parent = total * total / count as f64;
    let mut best: Option<Candidate> = None;
    for (a, &j) in b.active.iter().enumerate() {
        let off = b.offsets[a];
        let vals = &b.values[j];
        let mut sl = 0.0;
        let mut nl = 0usize;
        let mut prev: Option<usize> = None;
        for t in 0..vals.len() {
            let c = h.cnt[off + t] as usize;
            if c == 0 {
                continue;
            }
            if let Some(p) = prev {
                let nr = count - nl;
                let sr = total - sl;
                let gain = sl * sl / nl as f64 + sr * sr / nr as f64 - parent;
                if gain > min_gain && best.is_none_or(|c| gain > c.gain) {
                    best = Some(Candidate {
                        feature: j,
                        threshold: (vals[p] + vals[t]) / 2.0,
                        gain,
                    });
                }
            }
            sl += h.sum[off + t];
            nl += c;
            prev = Some(t);
            if nl == count {
                break;
            }
        }
    }
    best
}

struct OpenLeaf {
    node: usize,
    rows: Vec<usize>,
    total: f64,
    hist: Hist,
    split: Option<Candidate>,
}

/// Grow one tree on `rows` fitting residuals `r`.
fn grow(b: &Binned, x: &Matrix, rows: Vec<usize>, r: &[f64], max_splits: usize, min_gain: f64) -> Tree {
    let total: f64 = rows.iter().map(|&i| r[i]).sum();
    let mean = |t: f64, n: usize| if n == 0 { 0.0 } else { t / n as f64 };
    let mut nodes = vec![Node::Leaf {
        value: mean(total, rows.len()),
    }];
    let hist = Hist::build(b, &rows, r);
    let split = best_split(b, &hist, total, rows.len(), min_gain);
    let mut open = vec![OpenLeaf {
        node: 0,
        rows,
        total,
        hist,
        split,
    }];
    let mut splits = 0;
    while splits < max_splits {
        // leaf with the largest gain; earliest on ties
        let mut pick: Option<usize> = None;
        for (idx, l) in open.iter().enumerate() {
            if let Some(c) = l.split {
                if pick.is_none_or(|p| c.gain > open[p].split.unwrap().gain) {
                    pick = Some(idx);
                }
            }
        }
        let Some(idx) = pick else { break };
        let leaf = open.remove(idx);
        let c = leaf.split.unwrap();
        let (lrows, rrows): (Vec<usize>, Vec<usize>) =
            leaf.rows.iter().partition(|&&i| x.get(i, c.feature) <= c.threshold);
        let lt: f64 = lrows.iter().map(|&i| r[i]).sum();
        let rt = leaf.total - lt;
        let (lh, rh) = if lrows.len() <= rrows.len() {
            let s = Hist::build(b, &lrows, r);
            let o = leaf.hist.minus(&s);
            (s, o)
        } else {
            let s = Hist::build(b, &rrows, r);
            let o = leaf.hist.minus(&s);
            (o, s)
        };
        let li = nodes.len();
        let ri = li + 1;
        nodes.push(Node::Leaf {
            value: mean(lt, lrows.len()),
        });
        nodes.push(Node::Leaf {
            value: mean(rt, rrows.len()),
        });
        nodes[leaf.node] = Node::Split {
            feature: c.feature,
            threshold: c.threshold,
            left: li,
            right: ri,
            gain: c.gain,
        };
        splits += 1;
        if splits == max_splits {
            break;
        }
        let ls = best_split(b, &lh, lt, lrows.len(), min_gain);
        let rs = best_split(b, &rh, rt, rrows.len(), min_gain);
        open.push(OpenLeaf {
            node: li,
            rows: lrows,
            total: lt,
            hist: lh,
            split: ls,
        });
        open.push(OpenLeaf {
            node: ri,
            rows: rrows,
            total: rt,
            hist: rh,
            split: rs,
        });
    }
    Tree { nodes }
}

/// Boost on the listed training rows of `x`. After every tree, `on_tree`
/// receives the tree index and the tree (already part of the ensemble).
pub fn gbt_fit_rows(
    b: &Binned,
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    p: &GbtParams,
    columns: &[String],
    mut on_tree: impl FnMut(usize, &Tree),
) -> Result<TreeEnsemble> {
    p.validate()?;
    if rows.is_empty() {
        return Err(Error::invalid("boosting needs at least one row"));
    }
    let n = rows.len();
    let initial = rows.iter().map(|&i| y[i]).sum::<f64>() / n as f64;
    let scale: f64 = rows.iter().map(|&i| y[i] * y[i]).sum();
    let min_gain = 1e-14 * scale + f64::MIN_POSITIVE;
    let mut resid = vec![0.0; x.rows()];
    for &i in rows {
        resid[i] = y[i] - initial;
    }
    let bag_n = ((p.bag_fraction * n as f64).round() as usize).clamp(1, n);
    let mut trees = Vec::with_capacity(p.n_trees);
    for t in 0..p.n_trees {
        let bag: Vec<usize> = if bag_n == n {
            rows.to_vec()
        } else {
            let mut rng = seed::rng(p.seed, &[t as u64]);
            let mut pick: Vec<usize> = sample(&mut rng, n, bag_n).into_iter().map(|k| rows[k]).collect();
            pick.sort_unstable();
            pick
        };
        let tree = grow(b, x, bag, &resid, p.max_splits, min_gain);
        for &i in rows {
            resid[i] -= p.shrinkage * tree.predict_row(x.row(i));
        }
        on_tree(t, &tree);
        trees.push(tree);
    }
    Ok(TreeEnsemble {
        columns: columns.to_vec(),
        initial,
        shrinkage: p.shrinkage,
        bag_fraction: p.bag_fraction,
        max_splits: p.max_splits,
        seed: p.seed,
        trees,
    })
}

pub fn gbt_fit(x: &Matrix, y: &[f64], p: &GbtParams, columns: &[String]) -> Result<TreeEnsemble> {
    if y.len() != x.rows() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: x.rows(),
        });
    }
    let b = Binned::new(x);
    let rows: Vec<usize> = (0..x.rows()).collect();
    gbt_fit_rows(&b, x, y, &rows, p, columns, |_, _| {})
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|j| format!("x{j}")).collect()
    }

    fn params(max_splits: usize, n_trees: usize) -> GbtParams {
        GbtParams {
            max_splits,
            n_trees,
            shrinkage: 1.0,
            bag_fraction: 1.0,
            seed: 1,
        }
    }

    #[test]
    fn constant_target_is_degenerate() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let e = gbt_fit(&x, &[0.1; 3], &params(3, 5), &names(1)).unwrap();
        assert!(e.trees.iter().all(|t| t.split_count() == 0));
        assert!(e.predict(&x).iter().all(|p| (p - 0.1).abs() < 1e-15));
        assert!(e.influence().iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn stump_on_step() {
        let x = Matrix::from_rows(&[vec![5.0, 0.0], vec![1.0, 1.0], vec![3.0, 0.0], vec![7.0, 1.0]]).unwrap();
        let y = [1.0, 0.0, 0.0, 1.0];
        let e = gbt_fit(&x, &y, &params(1, 1), &names(2)).unwrap();
        match &e.trees[0].nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 4.0);
            }
            n => panic!("{n:?}"),
        }
        assert_eq!(e.predict(&x), y.to_vec());
        let inf = e.influence();
        assert_eq!(inf[0].1, 100.0);
    }

    #[test]
    fn signed_zeros_share_a_bin() {
        let x = Matrix::from_rows(&[vec![-0.0], vec![0.0], vec![1.0], vec![-0.0]]).unwrap();
        let e = gbt_fit(&x, &[0.0, 0.0, 1.0, 0.0], &params(1, 1), &names(1)).unwrap();
        assert_eq!(e.predict(&x), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn duplicate_column_never_chosen() {
        let x = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]).unwrap();
        let b = Binned::new(&x);
        assert_eq!(b.active_columns(), &[0]);
        let e = gbt_fit(&x, &[0.0, 0.0, 1.0], &params(2, 1), &names(2)).unwrap();
        assert!(e.trees[0].nodes.iter().all(|n| !matches!(n, Node::Split { feature: 1, .. })));
    }

    #[test]
    fn split_budget_respected_and_mse_falls() {
        let mut rng = crate::seed::rng(8, &[]);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| (0..4).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let y: Vec<f64> = rows.iter().map(|r| (r[0] > 0.5) as u8 as f64 * r[1] + r[2] * r[2]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let p = GbtParams { shrinkage: 0.3, ..params(4, 20) };
        let b = Binned::new(&x);
        let all: Vec<usize> = (0..200).collect();
        let mut pred = vec![0.0; 200];
        let mut last = f64::INFINITY;
        let init = y.iter().sum::<f64>() / 200.0;
        pred.iter_mut().for_each(|v| *v = init);
        let e = gbt_fit_rows(&b, &x, &y, &all, &p, &names(4), |_, t| {
            assert!(t.split_count() <= 4);
            for i in 0..200 {
                pred[i] += 0.3 * t.predict_row(x.row(i));
            }
            let mse = pred.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            assert!(mse <= last + 1e-12);
            last = mse;
        })
        .unwrap();
        let total: f64 = e.influence().iter().map(|(_, v)| v).sum();
        assert!((total - 100.0).abs() < 1e-9);
    }

    #[test]
    fn bagging_is_seeded() {
        let mut rng = crate::seed::rng(3, &[]);
        let rows: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let p = GbtParams { bag_fraction: 0.8, ..params(2, 3) };
        let a = gbt_fit(&x, &y, &p, &names(1)).unwrap();
        let b = gbt_fit(&x, &y, &p, &names(1)).unwrap();
        assert_eq!(a, b);
        let c = gbt_fit(&x, &y, &GbtParams { seed: 2, ..p }, &names(1)).unwrap();
        assert_ne!(a, c);
    }
}
