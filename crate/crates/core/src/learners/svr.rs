//! Epsilon-insensitive support vector regression with a Gaussian kernel,
//! solved in the dual by SMO with second-order working-set selection.
//!
//! The dual is written over `2n` variables `a = (alpha, alpha*)` in `[0, C]`:
//! minimise `1/2 a'Qa + p'a` subject to `sum_t s_t a_t = 0`, with signs
//! `s = (+1.., -1..)`, `Q_st = s_s s_t K(x_s, x_t)` and
//! `p = (eps - y, eps + y)`. The regression coefficient of row `i` is
//! `alpha_i - alpha*_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrHyperParams {
    pub c: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl SvrHyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !(self.gamma > 0.0) || !(self.epsilon >= 0.0) {
            return Err(Error::invalid(format!(
                "svr needs C > 0, gamma > 0 and epsilon >= 0 (got C={}, gamma={}, epsilon={})",
                self.c, self.gamma, self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrOptions {
    /// Stop when the maximal KKT violation falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvrOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

/// Column-wise min-max scaling fitted on the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitScaling {
    pub min: Vec<f64>,
    /// `max - min`; 0 marks a constant column, which maps to 0.
    pub range: Vec<f64>,
}

impl UnitScaling {
    pub fn fit(x: &Matrix) -> Self {
        let k = x.cols();
        let mut min = vec![f64::INFINITY; k];
        let mut max = vec![f64::NEG_INFINITY; k];
        for i in 0..x.rows() {
            for (j, &v) in x.row(i).iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        if x.rows() == 0 {
            min.iter_mut().for_each(|m| *m = 0.0);
            max.iter_mut().for_each(|m| *m = 0.0);
        }
        let range = min.iter().zip(&max).map(|(a, b)| b - a).collect();
        Self { min, range }
    }

    pub fn identity(k: usize) -> Self {
        Self {
            min: vec![0.0; k],
            range: vec![1.0; k],
        }
    }

    pub fn apply_row(&self, x: &[f64], out: &mut [f64]) {
        for j in 0..x.len() {
            out[j] = if self.range[j] > 0.0 {
                (x[j] - self.min[j]) / self.range[j]
            } else {
                0.0
            };
        }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            self.apply_row(x.row(i), out.row_mut(i));
        }
        out
    }
}

/// Fitted SVR. Predictions are `sum_i coef_i K(sv_i, x) + bias` on scaled
/// inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub columns: Vec<String>,
    pub hyperparams: SvrHyperParams,
    pub scaling: UnitScaling,
    /// Support vectors on the scaled input space, one per row.
    pub support_vectors: Matrix,
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    /// Training rows used, when the fit was on a subsample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<SubsampleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleRecord {
    pub seed: u64,
    pub rows: usize,
    pub of: usize,
}

impl KernelModel {
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let k = x.cols();
        let sv = &self.support_vectors;
        let g = self.hyperparams.gamma;
        par::map_range(x.rows(), |i| {
            let mut z = vec![0.0; k];
            self.scaling.apply_row(x.row(i), &mut z);
            let mut f = self.bias;
            for (s, &a) in self.dual_coefficients.iter().enumerate() {
                f += a * (-g * sqdist(sv.row(s), &z)).exp();
            }
            f
        })
    }
}

#[inline]
pub fn sqdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Pairwise squared distances of the rows of `x` (dense, symmetric).
pub fn distance_matrix(x: &Matrix) -> Vec<f64> {
    let n = x.rows();
    let rows: Vec<Vec<f64>> = par::map_range(n, |i| (0..n).map(|j| sqdist(x.row(i), x.row(j))).collect());
    rows.concat()
}

/// Solution of the dual on a given kernel matrix.
#[derive(Debug, Clone)]
pub struct DualSolution {
    /// `alpha_i - alpha*_i` per training row.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

/// Solve the SVR dual for kernel `kern` (row-major `n x n`).
pub fn solve_dual(kern: &[f64], y: &[f64], c: f64, eps: f64, opts: &SvrOptions) -> Result<DualSolution> {
    let n = y.len();
    debug_assert_eq!(kern.len(), n * n);
    let l = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let row = |t: usize| if t < n { t } else { t - n };
    let mut a = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| if t < n { eps - y[t] } else { eps + y[t - n] })
        .collect();
    let tau = 1e-12;
    let mut iter = 0;
    loop {
        // working set: i maximises -s G over I_up; j by second-order gain over I_low
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax2 = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..l {
            let up = if sign(t) > 0.0 { a[t] < c } else { a[t] > 0.0 };
            if up {
                let v = -sign(t) * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        let mut j_sel = usize::MAX;
        let mut best = f64::INFINITY;
        let (ki, si) = if i_sel != usize::MAX {
            (row(i_sel), sign(i_sel))
        } else {
            (0, 1.0)
        };
        for t in 0..l {
            let low = if sign(t) > 0.0 { a[t] > 0.0 } else { a[t] < c };
            if !low {
                continue;
            }
            let v = sign(t) * grad[t];
            if v > gmax2 {
                gmax2 = v;
            }
            if i_sel == usize::MAX {
                continue;
            }
            let b = gmax + v;
            if b > 0.0 {
                let kt = row(t);
                let q_ii = kern[ki * n + ki];
                let q_tt = kern[kt * n + kt];
                let q_it = si * sign(t) * kern[ki * n + kt];
                let mut quad = q_ii + q_tt - 2.0 * si * sign(t) * q_it;
                if quad <= 0.0 {
                    quad = tau;
                }
                let gain = -(b * b) / quad;
                if gain < best {
                    best = gain;
                    j_sel = t;
                }
            }
        }
        if gmax + gmax2 < opts.tol || j_sel == usize::MAX {
            break;
        }
        if iter >= opts.max_iter {
            return Err(Error::NonConvergence {
                what: "svr dual",
                iterations: iter,
                last_step: f64::NAN,
                gradient_norm: gmax + gmax2,
            });
        }
        iter += 1;

        let (i, j) = (i_sel, j_sel);
        let (ri, rj) = (row(i), row(j));
        let (yi, yj) = (sign(i), sign(j));
        let q_ij = yi * yj * kern[ri * n + rj];
        let q_ii = kern[ri * n + ri];
        let q_jj = kern[rj * n + rj];
        let old_ai = a[i];
        let old_aj = a[j];
        if yi != yj {
            let mut quad = q_ii + q_jj + 2.0 * q_ij;
            if quad <= 0.0 {
                quad = tau;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if a[j] > c {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            let mut quad = q_ii + q_jj - 2.0 * q_ij;
            if quad <= 0.0 {
                quad = tau;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c {
                if a[i] > c {
                    a[i] = c;
                    a[j] = sum - c;
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > c {
                if a[j] > c {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }
        let dai = a[i] - old_ai;
        let daj = a[j] - old_aj;
        if dai == 0.0 && daj == 0.0 {
            continue;
        }
        let kri = &kern[ri * n..(ri + 1) * n];
        let krj = &kern[rj * n..(rj + 1) * n];
        let (ci, cj) = (yi * dai, yj * daj);
        for r in 0..n {
            let d = ci * kri[r] + cj * krj[r];
            grad[r] += d;
            grad[r + n] -= d;
        }
    }

    // bias from free variables, else the midpoint of the feasible interval
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..l {
        let yg = sign(t) * grad[t];
        let at_upper = a[t] >= c;
        let at_lower = a[t] <= 0.0;
        if at_upper {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    let coef = (0..n).map(|r| a[r] - a[r + n]).collect();
    Ok(DualSolution {
        coef,
        bias: -rho,
        iterations: iter,
    })
}

/// Gaussian kernel from a squared-distance matrix.
pub fn kernel_from_distances(d: &[f64], gamma: f64) -> Vec<f64> {
    d.iter().map(|v| (-gamma * v).exp()).collect()
}

/// Fit on all rows of `x`. Inputs are min-max scaled to `[0, 1]` first.
pub fn svr_fit(
    x: &Matrix,
    y: &[f64],
    hp: SvrHyperParams,
    opts: &SvrOptions,
    columns: &[String],
) -> Result<KernelModel> {
    hp.validate()?;
    if y.len() != x.rows() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: x.rows(),
        });
    }
    if x.rows() == 0 {
        return Err(Error::invalid("svr needs at least one row"));
    }
    let scaling = UnitScaling::fit(x);
    let z = scaling.apply(x);
    let kern = kernel_from_distances(&distance_matrix(&z), hp.gamma);
    let sol = solve_dual(&kern, y, hp.c, hp.epsilon, opts)?;
    Ok(assemble(columns, hp, scaling, &z, &sol))
}

/// Package a dual solution as a model, keeping only the support vectors.
pub fn assemble(
    columns: &[String],
    hp: SvrHyperParams,
    scaling: UnitScaling,
    z: &Matrix,
    sol: &DualSolution,
) -> KernelModel {
    let sv: Vec<usize> = (0..sol.coef.len()).filter(|&i| sol.coef[i] != 0.0).collect();
    KernelModel {
        columns: columns.to_vec(),
        hyperparams: hp,
        scaling,
        support_vectors: z.select_rows(&sv),
        dual_coefficients: sv.iter().map(|&i| sol.coef[i]).collect(),
        bias: sol.bias,
        subsample: None,
    }
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::seed;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|j| format!("x{j}")).collect()
    }

    #[test]
    fn constant_target() {
        let x = Matrix::from_rows(&[vec![0.0], vec![0.3], vec![1.0], vec![0.6]]).unwrap();
        let hp = SvrHyperParams { c: 1.0, gamma: 1.0, epsilon: 0.1 };
        let m = svr_fit(&x, &[0.7; 4], hp, &SvrOptions::default(), &names(1)).unwrap();
        assert_eq!(m.dual_coefficients.len(), 0);
        assert!((m.bias - 0.7).abs() < 1e-12);
    }

    #[test]
    fn bad_params() {
        let x = Matrix::zeros(2, 1);
        for hp in [
            SvrHyperParams { c: 0.0, gamma: 1.0, epsilon: 0.1 },
            SvrHyperParams { c: 1.0, gamma: -1.0, epsilon: 0.1 },
            SvrHyperParams { c: 1.0, gamma: 1.0, epsilon: -0.1 },
        ] {
            assert!(svr_fit(&x, &[0.0, 1.0], hp, &SvrOptions::default(), &names(1)).is_err());
        }
    }

    #[test]
    fn kkt_on_random_problem() {
        let mut rng = seed::rng(4, &[]);
        let n = 30;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
        let y: Vec<f64> = rows.iter().map(|r| (3.0 * r[0]).sin() + r[1] + rng.random_range(-0.2..0.2)).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let hp = SvrHyperParams { c: 2.0, gamma: 2.0, epsilon: 0.05 };
        let opts = SvrOptions::default();
        let kern = kernel_from_distances(&distance_matrix(&x), hp.gamma);
        let sol = solve_dual(&kern, &y, hp.c, hp.epsilon, &opts).unwrap();
        assert!(sol.coef.iter().sum::<f64>().abs() < 1e-9);
        for i in 0..n {
            let f: f64 = (0..n).map(|s| sol.coef[s] * kern[s * n + i]).sum::<f64>() + sol.bias;
            let r = (y[i] - f).abs();
            let a = sol.coef[i].abs();
            assert!(a <= hp.c + 1e-12);
            if a >= hp.c {
                assert!(r >= hp.epsilon - opts.tol, "row {i}: r={r}");
            } else if a == 0.0 {
                assert!(r <= hp.epsilon + opts.tol, "row {i}: r={r}");
            } else {
                assert!((r - hp.epsilon).abs() <= opts.tol, "row {i}: r={r}");
            }
        }
    }

    #[test]
    fn predict_uses_scaled_inputs() {
        let x = Matrix::from_rows(&[vec![0.0], vec![10.0], vec![20.0]]).unwrap();
        let y = [0.0, 1.0, 0.0];
        let hp = SvrHyperParams { c: 10.0, gamma: 1.0, epsilon: 0.0 };
        let opts = SvrOptions { tol: 1e-10, ..Default::default() };
        let m = svr_fit(&x, &y, hp, &opts, &names(1)).unwrap();
        let p = m.predict(&x);
        for (a, b) in p.iter().zip(&y) {
            assert!((a - b).abs() < 1e-6, "{p:?}");
        }
    }
}
