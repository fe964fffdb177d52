use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Linkage {
    #[default]
    Ward,
    Average,
    Complete,
}

impl Linkage {
    pub fn as_str(self) -> &'static str {
        match self {
            Linkage::Ward => "ward",
            Linkage::Average => "average",
            Linkage::Complete => "complete",
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ward" => Ok(Linkage::Ward),
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            _ => Err(Error::invalid(format!("unknown linkage {s:?} (ward, average, complete)"))),
        }
    }
}

/// One merge. Ids below `n` are rows; merge `i` creates id `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

/// Merge sequence in non-decreasing height order.
///
/// Ward heights use the Euclidean-scaled convention: two singletons merge at
/// their distance, and in general groups A and B merge at
/// `sqrt(2 |A| |B| / (|A| + |B|)) * |centroid(A) - centroid(B)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub linkage: Linkage,
    pub n: usize,
    pub merges: Vec<Merge>,
}

/// Index into the packed upper triangle, `i < j`.
#[inline]
fn tri(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

fn pair(n: usize, i: usize, j: usize) -> usize {
    if i < j {
        tri(n, i, j)
    } else {
        tri(n, j, i)
    }
}

/// Packed pairwise Euclidean distances.
pub fn distances(x: &Matrix) -> Vec<f64> {
    let n = x.rows();
    let rows: Vec<Vec<f64>> = par::map_range(n, |i| {
        let a = x.row(i);
        ((i + 1)..n)
            .map(|j| {
                a.iter()
                    .zip(x.row(j))
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    });
    rows.concat()
}

fn lance_williams(l: Linkage, dxk: f64, dyk: f64, dxy: f64, nx: f64, ny: f64, nk: f64) -> f64 {
    match l {
        Linkage::Ward => {
            let t = nx + ny + nk;
            (((nx + nk) * dxk * dxk + (ny + nk) * dyk * dyk - nk * dxy * dxy) / t)
                .max(0.0)
                .sqrt()
        }
        Linkage::Average => (nx * dxk + ny * dyk) / (nx + ny),
        Linkage::Complete => dxk.max(dyk),
    }
}

/// Agglomerative clustering of the rows of `x` by nearest-neighbour chains.
pub fn agglomerate(x: &Matrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::invalid(format!("clustering needs at least 2 rows, got {n}")));
    }
    let mut d = distances(x);
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    let mut raw: Vec<(usize, usize, f64)> = Vec::with_capacity(n - 1);
    for _ in 0..n - 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("an active group"));
        }
        let (x, y, h) = loop {
            let x = *chain.last().expect("non-empty chain");
            let prev = (chain.len() > 1).then(|| chain[chain.len() - 2]);
            let (mut y, mut best) = match prev {
                Some(p) => (p, d[pair(n, x, p)]),
                None => (usize::MAX, f64::INFINITY),
            };
            for i in 0..n {
                if active[i] && i != x {
                    let v = d[pair(n, x, i)];
                    if v < best {
                        best = v;
                        y = i;
                    }
                }
            }
            if prev == Some(y) {
                chain.truncate(chain.len() - 2);
                break (x, y, best);
            }
            chain.push(y);
        };
        let (nx, ny) = (size[x] as f64, size[y] as f64);
        for k in 0..n {
            if active[k] && k != x && k != y {
                let v = lance_williams(linkage, d[pair(n, x, k)], d[pair(n, y, k)], h, nx, ny, size[k] as f64);
                d[pair(n, y, k)] = v;
            }
        }
        active[x] = false;
        size[y] += size[x];
        raw.push((x, y, h));
    }
    raw.sort_by(|p, q| p.2.total_cmp(&q.2));

    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    let mut csize = vec![1usize; 2 * n - 1];
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let merges = raw
        .into_iter()
        .enumerate()
        .map(|(m, (x, y, height))| {
            let (a, b) = (find(&mut parent, x), find(&mut parent, y));
            let id = n + m;
            parent[a] = id;
            parent[b] = id;
            csize[id] = csize[a] + csize[b];
            Merge {
                a: a.min(b),
                b: a.max(b),
                height,
                size: csize[id],
            }
        })
        .collect();
    Ok(Dendrogram { linkage, n, merges })
}

impl Dendrogram {
    /// Rows under group id `id`.
    pub fn members(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(g) = stack.pop() {
            if g < self.n {
                out.push(g);
            } else {
                let m = &self.merges[g - self.n];
                stack.push(m.a);
                stack.push(m.b);
            }
        }
        out.sort_unstable();
        out
    }

    /// The merge undone when going from `k` groups to `k + 1`.
    pub fn split_at(&self, k: usize) -> Option<&Merge> {
        (k >= 1 && k < self.n).then(|| &self.merges[self.n - 1 - k])
    }
}

/// Labels `1..=k` from undoing the last `k - 1` merges. Groups are numbered
/// in order of their first row.
pub fn cut(d: &Dendrogram, k: usize) -> Result<Vec<usize>> {
    let n = d.n;
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot cut {n} rows into {k} groups")));
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    // rows standing for each merged id
    let mut rep: Vec<usize> = (0..n).collect();
    for m in &d.merges[..n - k] {
        let (ra, rb) = (find(&mut parent, rep[m.a]), find(&mut parent, rep[m.b]));
        parent[rb] = ra;
        rep.push(ra);
    }
    let mut label_of = vec![0usize; n];
    let mut labels = Vec::with_capacity(n);
    let mut next = 0;
    for i in 0..n {
        let r = find(&mut parent, i);
        if label_of[r] == 0 {
            next += 1;
            label_of[r] = next;
        }
        labels.push(label_of[r]);
    }
    Ok(labels)
}

/// Min-max rescale each column to [0, 1]. Constant columns become zeros and
/// are flagged.
pub fn rescale_unit(x: &Matrix) -> (Matrix, Vec<bool>) {
    let mut out = x.clone();
    let mut constant = Vec::with_capacity(x.cols());
    for j in 0..x.cols() {
        let col = x.column(j);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let flat = !(hi > lo);
        constant.push(flat);
        for (i, v) in col.iter().enumerate() {
            out.set(i, j, if flat { 0.0 } else { (v - lo) / (hi - lo) });
        }
    }
    (out, constant)
}
