//! LASSO by covariance-form coordinate descent.
//!
//! The objective is `sum (y - a - x'b)^2 + lambda * sum |b_j|` with columns
//! standardised to mean 0 and unit (population) variance and the intercept
//! left unpenalised. All work happens on sufficient statistics: a
//! [`Moments`] record of raw cross-products, which is additive over row
//! blocks, so cross-validation folds can be assembled without rescanning
//! the data.

use serde::{Deserialize, Serialize};

use super::linear::{ols_fit, LinearModel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::par;

/// Coordinate descent stops when no standardised coefficient moves more
/// than this in a sweep.
pub const LASSO_TOL: f64 = 1e-7;
pub const LASSO_MAX_SWEEPS: usize = 10_000;

/// Raw cross-products of a block of rows.
#[derive(Debug, Clone)]
pub struct Moments {
    pub n: f64,
    pub sx: Vec<f64>,
    /// Packed upper triangle of `X'X`, row by row.
    pub sxx: Vec<f64>,
    pub sxy: Vec<f64>,
    pub sy: f64,
    pub syy: f64,
}

#[inline]
fn tri(k: usize, i: usize, j: usize) -> usize {
    // i <= j
    i * k - i * (i + 1) / 2 + j
}

impl Moments {
    pub fn zeros(k: usize) -> Self {
        Self {
            n: 0.0,
            sx: vec![0.0; k],
            sxx: vec![0.0; k * (k + 1) / 2],
            sxy: vec![0.0; k],
            sy: 0.0,
            syy: 0.0,
        }
    }

    pub fn k(&self) -> usize {
        self.sx.len()
    }

    /// Moments of the listed rows.
    pub fn of_rows(x: &Matrix, y: &[f64], rows: &[usize]) -> Self {
        let k = x.cols();
        // blocks of rows accumulate independently and are summed in order
        const BLOCK: usize = 2048;
        let blocks: Vec<&[usize]> = rows.chunks(BLOCK).collect();
        let parts = par::map_slice(&blocks, |b| {
            let mut m = Moments::zeros(k);
            for &i in *b {
                m.push(x.row(i), y[i]);
            }
            m
        });
        let mut total = Moments::zeros(k);
        for p in &parts {
            total.add(p);
        }
        total
    }

    pub fn push(&mut self, x: &[f64], y: f64) {
        let k = x.len();
        self.n += 1.0;
        self.sy += y;
        self.syy += y * y;
        for i in 0..k {
            let xi = x[i];
            self.sx[i] += xi;
            self.sxy[i] += xi * y;
            if xi == 0.0 {
                continue;
            }
            let base = tri(k, i, i);
            let row = &mut self.sxx[base..base + (k - i)];
            for (s, &xj) in row.iter_mut().zip(&x[i..]) {
                *s += xi * xj;
            }
        }
    }

    pub fn add(&mut self, o: &Moments) {
        self.n += o.n;
        self.sy += o.sy;
        self.syy += o.syy;
        self.sx.iter_mut().zip(&o.sx).for_each(|(a, b)| *a += b);
        self.sxy.iter_mut().zip(&o.sxy).for_each(|(a, b)| *a += b);
        self.sxx.iter_mut().zip(&o.sxx).for_each(|(a, b)| *a += b);
    }

    pub fn sub(&mut self, o: &Moments) {
        self.n -= o.n;
        self.sy -= o.sy;
        self.syy -= o.syy;
        self.sx.iter_mut().zip(&o.sx).for_each(|(a, b)| *a -= b);
        self.sxy.iter_mut().zip(&o.sxy).for_each(|(a, b)| *a -= b);
        self.sxx.iter_mut().zip(&o.sxx).for_each(|(a, b)| *a -= b);
    }
}

/// Per-column centring and scaling used internally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    /// Population standard deviation; 0 marks a constant column.
    pub scale: Vec<f64>,
}

/// Standardised problem: Gram matrix and correlations of the centred,
/// scaled columns with the centred outcome.
#[derive(Debug, Clone)]
pub struct Standardized {
    pub std: Standardization,
    pub n: f64,
    pub y_mean: f64,
    /// Centred outcome sum of squares.
    pub tss: f64,
    k: usize,
    gram: Vec<f64>,
    pub c: Vec<f64>,
}

impl Standardized {
    pub fn from_moments(m: &Moments) -> Result<Self> {
        let n = m.n;
        if n < 1.0 {
            return Err(Error::invalid("lasso needs at least one row"));
        }
        let k = m.k();
        let mean: Vec<f64> = m.sx.iter().map(|s| s / n).collect();
        let y_mean = m.sy / n;
        let mut scale = vec![0.0; k];
        for j in 0..k {
            let var = m.sxx[tri(k, j, j)] / n - mean[j] * mean[j];
            let s = var.max(0.0).sqrt();
            // relative cut-off: centred sum of squares lost to rounding
            scale[j] = if s > 1e-12 * (1.0 + mean[j].abs()) { s } else { 0.0 };
        }
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            if scale[i] == 0.0 {
                continue;
            }
            for j in i..k {
                if scale[j] == 0.0 {
                    continue;
                }
                let cov = m.sxx[tri(k, i, j)] - n * mean[i] * mean[j];
                let g = cov / (scale[i] * scale[j]);
                gram[i * k + j] = g;
                gram[j * k + i] = g;
            }
        }
        let c = (0..k)
            .map(|j| {
                if scale[j] == 0.0 {
                    0.0
                } else {
                    (m.sxy[j] - n * mean[j] * y_mean) / scale[j]
                }
            })
            .collect();
        let tss = (m.syy - n * y_mean * y_mean).max(0.0);
        Ok(Self {
            std: Standardization { mean, scale },
            n,
            y_mean,
            tss,
            k,
            gram,
            c,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    fn g(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.k + j]
    }

    /// Smallest lambda at which every coefficient is zero.
    pub fn lambda_max(&self) -> f64 {
        2.0 * self.c.iter().fold(0.0f64, |a, c| a.max(c.abs()))
    }

    /// Objective on the standardised scale (intercept profiled out).
    pub fn objective(&self, beta: &[f64], lambda: f64) -> f64 {
        let k = self.k;
        let mut quad = 0.0;
        for i in 0..k {
            if beta[i] == 0.0 {
                continue;
            }
            let row = &self.gram[i * k..(i + 1) * k];
            quad += beta[i] * row.iter().zip(beta).map(|(g, b)| g * b).sum::<f64>();
        }
        let lin: f64 = self.c.iter().zip(beta).map(|(c, b)| c * b).sum();
        let l1: f64 = beta.iter().map(|b| b.abs()).sum();
        self.tss - 2.0 * lin + quad + lambda * l1
    }

    /// Coordinate descent from `beta` (warm start). Returns the number of
    /// full sweeps; `trace` receives the objective after every sweep.
    pub fn descend(
        &self,
        beta: &mut [f64],
        lambda: f64,
        mut trace: Option<&mut Vec<f64>>,
    ) -> Result<usize> {
        if !(lambda >= 0.0) {
            return Err(Error::invalid(format!("lambda must be nonnegative, got {lambda}")));
        }
        let k = self.k;
        let half = lambda / 2.0;
        // gb = G beta
        let mut gb = vec![0.0; k];
        for j in 0..k {
            if beta[j] != 0.0 {
                self.shift(&mut gb, j, beta[j]);
            }
        }
        let update = |j: usize, beta: &mut [f64], gb: &mut [f64]| -> f64 {
            let gjj = self.g(j, j);
            if gjj <= 0.0 {
                return 0.0;
            }
            let rho = self.c[j] - gb[j] + gjj * beta[j];
            let new = soft(rho, half) / gjj;
            let delta = new - beta[j];
            if delta != 0.0 {
                beta[j] = new;
                self.shift(gb, j, delta);
            }
            delta.abs()
        };
        let mut sweeps = 0;
        loop {
            // full sweep
            let mut max_step = 0.0f64;
            for j in 0..k {
                max_step = max_step.max(update(j, beta, &mut gb));
            }
            sweeps += 1;
            if let Some(t) = trace.as_deref_mut() {
                t.push(self.objective(beta, lambda));
            }
            if max_step < LASSO_TOL {
                return Ok(sweeps);
            }
            // active-set sweeps until they settle
            let active: Vec<usize> = (0..k).filter(|&j| beta[j] != 0.0).collect();
            loop {
                let mut step = 0.0f64;
                for &j in &active {
                    step = step.max(update(j, beta, &mut gb));
                }
                sweeps += 1;
                if let Some(t) = trace.as_deref_mut() {
                    t.push(self.objective(beta, lambda));
                }
                if step < LASSO_TOL || sweeps >= LASSO_MAX_SWEEPS {
                    break;
                }
            }
            if sweeps >= LASSO_MAX_SWEEPS {
                return Err(Error::NonConvergence {
                    what: "lasso coordinate descent",
                    iterations: sweeps,
                    last_step: max_step,
                    gradient_norm: f64::NAN,
                });
            }
        }
    }

    #[inline]
    fn shift(&self, gb: &mut [f64], j: usize, delta: f64) {
        let row = &self.gram[j * self.k..(j + 1) * self.k];
        for (g, r) in gb.iter_mut().zip(row) {
            *g += delta * r;
        }
    }

    /// Back-transform standardised coefficients to the original scale.
    pub fn to_original(&self, beta: &[f64]) -> (f64, Vec<f64>) {
        let b: Vec<f64> = beta
            .iter()
            .zip(&self.std.scale)
            .map(|(b, s)| if *s == 0.0 { 0.0 } else { b / s })
            .collect();
        let a = self.y_mean - b.iter().zip(&self.std.mean).map(|(b, m)| b * m).sum::<f64>();
        (a, b)
    }
}

#[inline]
fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Fitted LASSO.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseLinearModel {
    pub columns: Vec<String>,
    pub lambda: f64,
    pub intercept: f64,
    /// Original-scale coefficients; zeros are unselected columns.
    pub coefficients: Vec<f64>,
    pub standardization: Standardization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_lasso: Option<LinearModel>,
}

impl SparseLinearModel {
    pub fn support(&self) -> Vec<usize> {
        (0..self.coefficients.len())
            .filter(|&j| self.coefficients[j] != 0.0)
            .collect()
    }

    pub fn support_size(&self) -> usize {
        self.coefficients.iter().filter(|&&b| b != 0.0).count()
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|i| self.predict_row(x.row(i))).collect()
    }

    /// Selected columns ranked by absolute post-LASSO coefficient (falling
    /// back to the LASSO coefficient when no refit is stored).
    pub fn ranked(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = match &self.post_lasso {
            Some(p) => p.named(),
            None => self
                .support()
                .into_iter()
                .map(|j| (self.columns[j].clone(), self.coefficients[j]))
                .collect(),
        };
        out.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
        out
    }
}

fn sparse_model(s: &Standardized, beta: &[f64], lambda: f64, columns: &[String]) -> SparseLinearModel {
    let (intercept, coefficients) = s.to_original(beta);
    SparseLinearModel {
        columns: columns.to_vec(),
        lambda,
        intercept,
        coefficients,
        standardization: s.std.clone(),
        post_lasso: None,
    }
}

pub fn lasso_fit(x: &Matrix, y: &[f64], lambda: f64, columns: &[String]) -> Result<SparseLinearModel> {
    check(x, y, columns)?;
    let rows: Vec<usize> = (0..x.rows()).collect();
    let s = Standardized::from_moments(&Moments::of_rows(x, y, &rows))?;
    let mut beta = vec![0.0; s.k()];
    s.descend(&mut beta, lambda, None)?;
    Ok(sparse_model(&s, &beta, lambda, columns))
}

/// Fit a decreasing sequence of lambdas with warm starts. Returns one
/// standardised coefficient vector per lambda, in the order given.
pub fn lasso_path(s: &Standardized, lambdas: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
    let mut beta = vec![0.0; s.k()];
    let mut out = vec![Vec::new(); lambdas.len()];
    for i in order {
        s.descend(&mut beta, lambdas[i], None)?;
        out[i] = beta.clone();
    }
    Ok(out)
}

/// Fit at `lambda` starting from the solutions of larger lambdas on `grid`,
/// which is much faster than a cold start at small penalties.
pub fn lasso_fit_warm(
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    grid: &[f64],
    columns: &[String],
) -> Result<SparseLinearModel> {
    check(x, y, columns)?;
    let rows: Vec<usize> = (0..x.rows()).collect();
    let s = Standardized::from_moments(&Moments::of_rows(x, y, &rows))?;
    Ok(fit_standardized(&s, lambda, grid, columns)?)
}

pub fn fit_standardized(
    s: &Standardized,
    lambda: f64,
    grid: &[f64],
    columns: &[String],
) -> Result<SparseLinearModel> {
    let mut path: Vec<f64> = grid.iter().copied().filter(|&l| l > lambda).collect();
    path.sort_by(|a, b| b.total_cmp(a));
    let mut beta = vec![0.0; s.k()];
    for l in path {
        s.descend(&mut beta, l, None)?;
    }
    s.descend(&mut beta, lambda, None)?;
    Ok(sparse_model(s, &beta, lambda, columns))
}

/// OLS restricted to the LASSO support; stored in `m.post_lasso`.
pub fn post_lasso_ols(m: &mut SparseLinearModel, x: &Matrix, y: &[f64]) -> Result<()> {
    let support = m.support();
    let names: Vec<String> = support.iter().map(|&j| m.columns[j].clone()).collect();
    let fit = ols_fit(&x.select_columns(&support), y, &names)?;
    m.post_lasso = Some(fit);
    Ok(())
}

fn check(x: &Matrix, y: &[f64], columns: &[String]) -> Result<()> {
    if y.len() != x.rows() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: x.rows(),
        });
    }
    if columns.len() != x.cols() {
        return Err(Error::LengthMismatch {
            left: columns.len(),
            right: x.cols(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::seed;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|j| format!("x{j}")).collect()
    }

    fn random_problem(n: usize, k: usize, s: u64) -> (Matrix, Vec<f64>) {
        let mut rng = seed::rng(s, &[]);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y = rows
            .iter()
            .map(|r| 0.5 + 2.0 * r[0] - r[1 % k] + rng.random_range(-0.3..0.3))
            .collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn zero_lambda_is_ols() {
        let (x, y) = random_problem(40, 4, 3);
        let l = lasso_fit(&x, &y, 0.0, &names(4)).unwrap();
        let o = ols_fit(&x, &y, &names(4)).unwrap();
        for (a, b) in l.coefficients.iter().zip(&o.coefficients) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!((l.intercept - o.intercept).abs() < 1e-6);
    }

    #[test]
    fn scalar_soft_threshold() {
        // one standardised column: x = +-1 so sum x^2 = n
        let x = Matrix::from_rows(&[vec![1.0], vec![-1.0], vec![1.0], vec![-1.0]]).unwrap();
        let y = [2.0, -1.0, 1.0, 0.0];
        let s_xx = 4.0;
        let b: f64 = (2.0 + 1.0 + 1.0 - 0.0) / s_xx;
        for lambda in [0.0, 1.0, 3.0, 7.9, 8.0, 20.0] {
            let m = lasso_fit(&x, &y, lambda, &names(1)).unwrap();
            let oracle = b.signum() * (b.abs() - lambda / (2.0 * s_xx)).max(0.0);
            assert!((m.coefficients[0] - oracle).abs() < 1e-9, "lambda {lambda}");
        }
    }

    #[test]
    fn all_zero_above_lambda_max() {
        let (x, y) = random_problem(30, 5, 9);
        let rows: Vec<usize> = (0..30).collect();
        let s = Standardized::from_moments(&Moments::of_rows(&x, &y, &rows)).unwrap();
        let m = lasso_fit(&x, &y, s.lambda_max() * 1.0001, &names(5)).unwrap();
        assert_eq!(m.support_size(), 0);
        let ybar = y.iter().sum::<f64>() / 30.0;
        assert!((m.intercept - ybar).abs() < 1e-12);
        let m = lasso_fit(&x, &y, s.lambda_max() * 0.99, &names(5)).unwrap();
        assert_eq!(m.support_size(), 1);
    }

    #[test]
    fn negative_lambda_rejected() {
        let (x, y) = random_problem(10, 2, 1);
        assert!(lasso_fit(&x, &y, -1.0, &names(2)).is_err());
    }

    #[test]
    fn moments_are_additive() {
        let (x, y) = random_problem(25, 3, 5);
        let all: Vec<usize> = (0..25).collect();
        let mut m = Moments::of_rows(&x, &y, &all[..10]);
        m.add(&Moments::of_rows(&x, &y, &all[10..]));
        let whole = Moments::of_rows(&x, &y, &all);
        for (a, b) in m.sxx.iter().zip(&whole.sxx) {
            assert!((a - b).abs() < 1e-9);
        }
        m.sub(&Moments::of_rows(&x, &y, &all[10..]));
        let head = Moments::of_rows(&x, &y, &all[..10]);
        assert!((m.syy - head.syy).abs() < 1e-9);
    }

    #[test]
    fn post_lasso_restricted() {
        let (x, y) = random_problem(50, 3, 11);
        let mut m = lasso_fit(&x, &y, 0.0, &names(3)).unwrap();
        m.coefficients[1] = 0.0;
        post_lasso_ols(&mut m, &x, &y).unwrap();
        let restricted = ols_fit(&x.select_columns(&[0, 2]), &y, &["x0".into(), "x2".into()]).unwrap();
        assert_eq!(m.post_lasso.as_ref().unwrap(), &restricted);
        let mut empty = lasso_fit(&x, &y, 1e9, &names(3)).unwrap();
        post_lasso_ols(&mut empty, &x, &y).unwrap();
        let ybar = y.iter().sum::<f64>() / 50.0;
        assert!((empty.post_lasso.unwrap().intercept - ybar).abs() < 1e-12);
    }

    #[test]
    fn path_matches_cold_fits() {
        let (x, y) = random_problem(60, 6, 2);
        let rows: Vec<usize> = (0..60).collect();
        let s = Standardized::from_moments(&Moments::of_rows(&x, &y, &rows)).unwrap();
        let lambdas = [s.lambda_max() * 0.5, s.lambda_max() * 0.05, 0.1];
        let path = lasso_path(&s, &lambdas).unwrap();
        for (l, b) in lambdas.iter().zip(&path) {
            let mut cold = vec![0.0; 6];
            s.descend(&mut cold, *l, None).unwrap();
            for (a, c) in b.iter().zip(&cold) {
                assert!((a - c).abs() < 1e-5);
            }
        }
    }
}
