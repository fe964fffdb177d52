//! Small dense linear algebra: a row-major matrix, rank-revealing least
//! squares and a Cholesky solver. Sizes here are "tall and narrow" (tens of
//! thousands of rows, a few hundred columns), so nothing fancier is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: rows * cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    left: r.len(),
                    right: cols,
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Build from columns (each of equal length).
    pub fn from_columns(columns: &[Vec<f64>], rows: usize) -> Result<Self> {
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::LengthMismatch {
                    left: c.len(),
                    right: rows,
                });
            }
            for (i, &v) in c.iter().enumerate() {
                m.data[i * cols + j] = v;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Copy of the listed rows, in the listed order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Copy of the listed columns, in the listed order.
    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for i in 0..self.rows {
            let r = self.row(i);
            data.extend(idx.iter().map(|&j| r[j]));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    /// Columns as separate vectors (column-major copy).
    pub fn to_columns(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::with_capacity(self.rows); self.cols];
        for i in 0..self.rows {
            for (j, &v) in self.row(i).iter().enumerate() {
                out[j].push(v);
            }
        }
        out
    }

    /// Append columns to the right.
    pub fn hstack(&self, extra: &Matrix) -> Result<Matrix> {
        if extra.rows != self.rows {
            return Err(Error::LengthMismatch {
                left: extra.rows,
                right: self.rows,
            });
        }
        let cols = self.cols + extra.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(extra.row(i));
        }
        Ok(Matrix {
            rows: self.rows,
            cols,
            data,
        })
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Result of a rank-revealing least-squares solve.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub intercept: f64,
    /// One entry per input column; dropped columns hold 0.
    pub coefficients: Vec<f64>,
    /// Columns found to be linearly dependent on earlier ones (or constant).
    pub dropped: Vec<usize>,
}

/// Relative residual-norm threshold under which a column counts as collinear.
const COLLINEAR_TOL: f64 = 1e-9;

/// Least squares with an unpenalised intercept.
///
/// Columns are centred and orthogonalised in input order by modified
/// Gram-Schmidt with one re-orthogonalisation pass. A column whose residual
/// norm falls below `COLLINEAR_TOL` times its own norm is dropped and reported;
/// the remaining system has full rank and is solved by back substitution.
pub fn least_squares(x: &Matrix, y: &[f64]) -> Result<LeastSquares> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::invalid("least squares needs at least one row"));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: n,
        });
    }
    let k = x.cols();
    let y_mean = mean(y);
    let mut qy: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let columns = x.to_columns();
    let means: Vec<f64> = columns.iter().map(|c| mean(c)).collect();

    let mut q: Vec<Vec<f64>> = Vec::new();
    // r[t] = coefficients of kept column t against q[0..=t]
    let mut r: Vec<Vec<f64>> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();

    for (j, col) in columns.into_iter().enumerate() {
        let scale = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v: Vec<f64> = col.iter().map(|c| c - means[j]).collect();
        let mut rcol = vec![0.0; q.len() + 1];
        for _pass in 0..2 {
            for (t, qt) in q.iter().enumerate() {
                let p = dot(qt, &v);
                rcol[t] += p;
                for (vi, qi) in v.iter_mut().zip(qt) {
                    *vi -= p * qi;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if scale == 0.0 || norm <= COLLINEAR_TOL * scale {
            dropped.push(j);
            continue;
        }
        for vi in &mut v {
            *vi /= norm;
        }
        rcol[q.len()] = norm;
        q.push(v);
        r.push(rcol);
        kept.push(j);
    }

    // project y (twice, for accuracy)
    let m = q.len();
    let mut qty = vec![0.0; m];
    for _pass in 0..2 {
        for (t, qt) in q.iter().enumerate() {
            let p = dot(qt, &qy);
            qty[t] += p;
            for (yi, qi) in qy.iter_mut().zip(qt) {
                *yi -= p * qi;
            }
        }
    }

    // back substitution: R b = Q'y, R upper triangular with R[s][t] = r[t][s]
    let mut b = vec![0.0; m];
    for s in (0..m).rev() {
        let mut acc = qty[s];
        for t in (s + 1)..m {
            acc -= r[t][s] * b[t];
        }
        b[s] = acc / r[s][s];
    }

    let mut coefficients = vec![0.0; k];
    for (t, &j) in kept.iter().enumerate() {
        coefficients[j] = b[t];
    }
    let intercept = y_mean - coefficients.iter().zip(&means).map(|(c, m)| c * m).sum::<f64>();
    Ok(LeastSquares {
        intercept,
        coefficients,
        dropped,
    })
}

/// Solve `A x = b` for symmetric positive-definite `A` (given as rows).
pub fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|p| l[i][p] * l[j][p]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 || !d.is_finite() {
                    return Err(Error::invalid("matrix is not positive definite"));
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|p| l[i][p] * z[p]).sum();
        z[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|p| l[p][i] * x[p]).sum();
        x[i] = (z[i] - s) / l[i][i];
    }
    Ok(x)
}
