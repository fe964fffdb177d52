use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::hierarchy::{cut, Dendrogram};
use crate::linalg::Matrix;
use crate::{Error, Result};

/// An index value that may be infinite (zero within-group spread).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IndexValue {
    Finite(f64),
    Infinite(Infinite),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Infinite {
    Infinity,
}

impl IndexValue {
    pub const INFINITY: IndexValue = IndexValue::Infinite(Infinite::Infinity);

    fn ratio(num: f64, den: f64) -> Self {
        if den > 0.0 {
            IndexValue::Finite(num / den)
        } else {
            IndexValue::INFINITY
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, IndexValue::Infinite(_))
    }

    /// Ordering key; infinity sorts above every finite value.
    pub fn key(self) -> f64 {
        match self {
            IndexValue::Finite(v) => v,
            IndexValue::Infinite(_) => f64::INFINITY,
        }
    }
}

/// Sum of squared distances from the rows in `idx` to their centroid.
pub fn within_ss(x: &Matrix, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let p = x.cols();
    let mut c = vec![0.0; p];
    for &i in idx {
        for (cj, v) in c.iter_mut().zip(x.row(i)) {
            *cj += v;
        }
    }
    c.iter_mut().for_each(|v| *v /= idx.len() as f64);
    idx.iter()
        .map(|&i| x.row(i).iter().zip(&c).map(|(v, m)| (v - m).powi(2)).sum::<f64>())
        .sum()
}

fn groups_of(labels: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut g: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        g.entry(l).or_default().push(i);
    }
    g
}

/// (between, within, total) sums of squares for a labelling.
pub fn ss_decomposition(x: &Matrix, labels: &[usize]) -> Result<(f64, f64, f64)> {
    if labels.len() != x.rows() {
        return Err(Error::LengthMismatch {
            left: x.rows(),
            right: labels.len(),
        });
    }
    let all: Vec<usize> = (0..x.rows()).collect();
    let total = within_ss(x, &all);
    let within: f64 = groups_of(labels).values().map(|g| within_ss(x, g)).sum();
    let n = x.rows() as f64;
    let grand: Vec<f64> = (0..x.cols()).map(|j| x.column(j).iter().sum::<f64>() / n).collect();
    let between: f64 = groups_of(labels)
        .values()
        .map(|g| {
            let m = g.len() as f64;
            (0..x.cols())
                .map(|j| {
                    let c = g.iter().map(|&i| x.get(i, j)).sum::<f64>() / m;
                    m * (c - grand[j]).powi(2)
                })
                .sum::<f64>()
        })
        .sum();
    Ok((between, within, total))
}

/// Calinski-Harabasz pseudo-F: `(B / (k - 1)) / (W / (n - k))`.
pub fn calinski_harabasz(x: &Matrix, labels: &[usize]) -> Result<IndexValue> {
    let n = x.rows();
    let k = groups_of(labels).len();
    if k < 2 || k + 1 > n {
        return Err(Error::invalid(format!("pseudo-F needs 2 <= k <= n - 1, got k = {k}, n = {n}")));
    }
    let (b, w, _) = ss_decomposition(x, labels)?;
    Ok(IndexValue::ratio(b / (k - 1) as f64, w / (n - k) as f64))
}

/// Duda-Hart statistics for the split taking `k` groups to `k + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DudaHart {
    pub k: usize,
    pub parent_size: usize,
    pub je1: f64,
    pub je2: f64,
    /// Je(2) / Je(1); 1 when the parent has no spread.
    pub ratio: f64,
    pub pseudo_t2: IndexValue,
}

pub fn duda_hart(x: &Matrix, d: &Dendrogram, k: usize) -> Result<DudaHart> {
    let m = d
        .split_at(k)
        .ok_or_else(|| Error::invalid(format!("no split from {k} groups with {} rows", d.n)))?;
    let (a, b) = (d.members(m.a), d.members(m.b));
    let parent: Vec<usize> = {
        let mut p = a.clone();
        p.extend(&b);
        p
    };
    if parent.len() < 2 {
        return Err(Error::invalid("Duda-Hart needs a parent with at least two members"));
    }
    let je1 = within_ss(x, &parent);
    let je2 = within_ss(x, &a) + within_ss(x, &b);
    let (ratio, pseudo_t2) = if je1 <= 0.0 {
        (1.0, IndexValue::Finite(0.0))
    } else {
        let ratio = (je2 / je1).clamp(0.0, 1.0);
        let t2 = if parent.len() == 2 {
            IndexValue::INFINITY
        } else {
            IndexValue::ratio(je1 - je2, je2 / (parent.len() - 2) as f64)
        };
        (ratio, t2)
    };
    Ok(DudaHart {
        k,
        parent_size: parent.len(),
        je1,
        je2,
        ratio,
        pseudo_t2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KRow {
    pub k: usize,
    pub pseudo_f: IndexValue,
    pub duda_hart: Option<DudaHart>,
}

/// Group-count recommendation with the supporting index tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub recommended: usize,
    /// The pseudo-F maximum sits at the edge of the searched range or beats
    /// the runner-up by less than [`PROMINENCE`].
    pub low_confidence: bool,
    pub table: Vec<KRow>,
}

/// Ratio the best pseudo-F must reach over every other `k` to count as a
/// clear recommendation.
pub const PROMINENCE: f64 = 1.1;

/// Pseudo-F and Duda-Hart for `k = 2..=k_max`; recommends the pseudo-F
/// maximum (smallest `k` on ties).
pub fn select_k(d: &Dendrogram, x: &Matrix, k_max: usize) -> Result<KSelection> {
    let k_max = k_max.min(d.n.saturating_sub(1));
    if k_max < 2 {
        return Err(Error::invalid(format!("need at least 3 rows to compare group counts, got {}", d.n)));
    }
    let mut table = Vec::with_capacity(k_max - 1);
    for k in 2..=k_max {
        let labels = cut(d, k)?;
        table.push(KRow {
            k,
            pseudo_f: calinski_harabasz(x, &labels)?,
            duda_hart: duda_hart(x, d, k).ok(),
        });
    }
    let mut best = 0;
    for (i, r) in table.iter().enumerate() {
        if r.pseudo_f.key() > table[best].pseudo_f.key() {
            best = i;
        }
    }
    let recommended = table[best].k;
    let top = table[best].pseudo_f.key();
    let runner_up = table
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best)
        .map(|(_, r)| r.pseudo_f.key())
        .fold(f64::NEG_INFINITY, f64::max);
    let flat = runner_up.is_finite() && !(top >= PROMINENCE * runner_up);
    let low_confidence = k_max > 2 && (recommended == 2 || recommended == k_max || flat);
    Ok(KSelection {
        recommended,
        low_confidence,
        table,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    use super::super::hierarchy::{agglomerate, Linkage};
    use super::*;

    fn hand() -> (Matrix, Vec<usize>) {
        let rows = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![5.0, 5.0],
            vec![6.0, 5.0],
            vec![5.0, 6.0],
            vec![6.0, 7.0],
            vec![10.0, 0.0],
            vec![11.0, 1.0],
            vec![10.0, 2.0],
            vec![12.0, 0.0],
        ];
        let labels = vec![1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3];
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn pseudo_f_hand_dataset() {
        let (x, labels) = hand();
        // group centroids (0.5,0.5), (5.5,5.75), (10.75,0.75); grand mean (5.5833.., 2.3333..)
        let w1 = 4.0 * 0.5;
        let w2 = (0.25 + 0.5625) + (0.25 + 0.5625) + (0.25 + 0.0625) + (0.25 + 1.5625);
        let w3 = (0.5625 + 0.5625) + (0.0625 + 0.0625) + (0.5625 + 1.5625) + (1.5625 + 0.5625);
        let within = w1 + w2 + w3;
        let g = (67.0 / 12.0, 28.0 / 12.0);
        let cent: [(f64, f64); 3] = [(0.5, 0.5), (5.5, 5.75), (10.75, 0.75)];
        let between: f64 = cent.iter().map(|c| 4.0 * ((c.0 - g.0).powi(2) + (c.1 - g.1).powi(2))).sum();
        let want = (between / 2.0) / (within / 9.0);
        let got = calinski_harabasz(&x, &labels).unwrap().key();
        assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");
        let (b, w, t) = ss_decomposition(&x, &labels).unwrap();
        assert!((b - between).abs() < 1e-9 && (w - within).abs() < 1e-9);
        assert!((b + w - t).abs() < 1e-9 * t);
        let relabelled: Vec<usize> = labels.iter().map(|l| [0, 7, 3, 9][*l]).collect();
        assert_eq!(calinski_harabasz(&x, &relabelled).unwrap(), calinski_harabasz(&x, &labels).unwrap());
    }

    #[test]
    fn pseudo_f_edge_cases() {
        let x = Matrix::from_rows(&[vec![0.0], vec![0.0], vec![9.0], vec![9.0]]).unwrap();
        assert_eq!(calinski_harabasz(&x, &[1, 1, 2, 2]).unwrap(), IndexValue::INFINITY);
        assert!(calinski_harabasz(&x, &[1, 1, 1, 1]).is_err());
        assert!(calinski_harabasz(&x, &[1, 2, 3, 4]).is_err());
        let json = serde_json::to_string(&IndexValue::INFINITY).unwrap();
        assert_eq!(json, "\"infinity\"");
        assert_eq!(serde_json::from_str::<IndexValue>(&json).unwrap(), IndexValue::INFINITY);
    }

    #[test]
    fn duda_hart_cases() {
        // two clumps of identical points: children have no spread
        let x = Matrix::from_rows(&[vec![0.0], vec![0.0], vec![4.0], vec![4.0]]).unwrap();
        let d = agglomerate(&x, Linkage::Ward).unwrap();
        let dh = duda_hart(&x, &d, 1).unwrap();
        assert_eq!((dh.je2, dh.ratio), (0.0, 0.0));
        assert_eq!(dh.je1, 16.0);
        assert!(dh.pseudo_t2.is_infinite());

        // hand check on 0, 1, 10
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![10.0]]).unwrap();
        let d = agglomerate(&x, Linkage::Average).unwrap();
        let dh = duda_hart(&x, &d, 1).unwrap();
        let mean = 11.0 / 3.0;
        let je1 = [0.0, 1.0, 10.0].iter().map(|v: &f64| (v - mean).powi(2)).sum::<f64>();
        assert!((dh.je1 - je1).abs() < 1e-12);
        assert!((dh.je2 - 0.5).abs() < 1e-12);
        assert!((dh.pseudo_t2.key() - (je1 - 0.5) / 0.5).abs() < 1e-9);
        let dh2 = duda_hart(&x, &d, 2).unwrap();
        assert_eq!(dh2.parent_size, 2);
        assert!(duda_hart(&x, &d, 3).is_err());

        // identical parent points: splitting changes nothing
        let x = Matrix::from_rows(&[vec![2.0], vec![2.0], vec![2.0]]).unwrap();
        let d = agglomerate(&x, Linkage::Ward).unwrap();
        let dh = duda_hart(&x, &d, 1).unwrap();
        assert_eq!(dh.pseudo_t2, IndexValue::Finite(0.0));
    }

    fn blobs(centres: &[(f64, f64)], per: usize, sd: f64, seed: u64) -> Matrix {
        let mut rng = crate::seed::rng(seed, &[]);
        let mut rows = Vec::new();
        for &(cx, cy) in centres {
            for _ in 0..per {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                rows.push(vec![cx + sd * a, cy + sd * b]);
            }
        }
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn five_blobs() {
        let centres = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (10.0, 10.0), (5.0, 20.0)];
        for seed in 0..5 {
            let x = blobs(&centres, 40, 1.0, seed);
            let d = agglomerate(&x, Linkage::Ward).unwrap();
            let s = select_k(&d, &x, 10).unwrap();
            assert_eq!(s.recommended, 5, "seed {seed}");
            assert!(!s.low_confidence);
            assert_eq!(s.table.len(), 9);
        }
    }

    #[test]
    fn single_blob_flagged() {
        let x = blobs(&[(0.0, 0.0)], 200, 1.0, 3);
        let d = agglomerate(&x, Linkage::Ward).unwrap();
        let s = select_k(&d, &x, 10).unwrap();
        assert!(s.low_confidence, "{:?}", s.table.iter().map(|r| r.pseudo_f.key()).collect::<Vec<_>>());
        let s2 = select_k(&d, &x, 2).unwrap();
        assert_eq!(s2.recommended, 2);
        assert!(!s2.low_confidence);
        assert_eq!(s2.table.len(), 1);
    }

    proptest! {
        #[test]
        fn ss_adds_up(rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 4..30), k in 2usize..4) {
            let x = Matrix::from_rows(&rows).unwrap();
            let d = agglomerate(&x, Linkage::Ward).unwrap();
            let labels = cut(&d, k).unwrap();
            let (b, w, t) = ss_decomposition(&x, &labels).unwrap();
            prop_assert!((b + w - t).abs() <= 1e-9 * t.max(1.0));
            for kk in 1..rows.len() {
                let dh = duda_hart(&x, &d, kk).unwrap();
                prop_assert!((0.0..=1.0).contains(&dh.ratio));
            }
        }
    }
}
