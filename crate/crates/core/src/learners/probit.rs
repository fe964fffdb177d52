use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::linear::LinearModel;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, least_squares, Matrix};

pub const PROBIT_MAX_ITER: usize = 200;
pub const PROBIT_TOL: f64 = 1e-8;
const MAX_HALVINGS: usize = 30;

/// Fractional probit: `E[y | x] = Phi(a + x'b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbitModel {
    pub index: LinearModel,
    pub iterations: usize,
}

impl ProbitModel {
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|i| norm_cdf(self.index.predict_row(x.row(i)))).collect()
    }
}

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `ln Phi(z)`, accurate in the lower tail.
fn ln_cdf(z: f64) -> f64 {
    let p = norm_cdf(z);
    if p > 1e-300 {
        p.ln()
    } else {
        // Mills-ratio asymptotics
        -0.5 * z * z - (-z).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// `phi(z) / Phi(z)`, stable for very negative `z`.
fn mills(z: f64) -> f64 {
    let p = norm_cdf(z);
    if p > 1e-300 {
        norm_pdf(z) / p
    } else {
        -z
    }
}

/// Bernoulli quasi-log-likelihood at linear index values.
fn quasi_ll(eta: &[f64], y: &[f64]) -> f64 {
    eta.iter()
        .zip(y)
        .map(|(&e, &t)| {
            let mut s = 0.0;
            if t > 0.0 {
                s += t * ln_cdf(e);
            }
            if t < 1.0 {
                s += (1.0 - t) * ln_cdf(-e);
            }
            s
        })
        .sum()
}

/// Maximise the quasi-likelihood by Fisher scoring with step halving.
/// Collinear columns are detected up front and held at zero.
pub fn fractional_probit_fit(x: &Matrix, y: &[f64], columns: &[String]) -> Result<ProbitModel> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::invalid("probit needs at least one row"));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch { left: y.len(), right: n });
    }
    if y.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid("fractional probit needs outcomes in [0, 1]"));
    }
    let dropped = least_squares(x, y)?.dropped;
    let kept: Vec<usize> = (0..x.cols()).filter(|j| !dropped.contains(j)).collect();
    let p = kept.len() + 1;
    let design = |i: usize| -> Vec<f64> {
        let r = x.row(i);
        std::iter::once(1.0).chain(kept.iter().map(|&j| r[j])).collect()
    };
    let rows: Vec<Vec<f64>> = (0..n).map(design).collect();
    let index = |b: &[f64]| -> Vec<f64> { rows.iter().map(|r| r.iter().zip(b).map(|(a, c)| a * c).sum()).collect() };

    let ybar = y.iter().sum::<f64>() / n as f64;
    let mut beta = vec![0.0; p];
    beta[0] = probit_start(ybar);
    let mut eta = index(&beta);
    let mut ll = quasi_ll(&eta, y);
    let mut last_step = f64::NAN;
    for it in 0..PROBIT_MAX_ITER {
        let mut grad = vec![0.0; p];
        let mut info = vec![vec![0.0; p]; p];
        for (r, (&e, &t)) in rows.iter().zip(eta.iter().zip(y)) {
            let m_pos = mills(e);
            let m_neg = mills(-e);
            // score weight and Fisher weight for the Bernoulli probit
            let s = t * m_pos - (1.0 - t) * m_neg;
            let w = m_pos * m_neg;
            for a in 0..p {
                grad[a] += s * r[a];
                let wa = w * r[a];
                for b in 0..=a {
                    info[a][b] += wa * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                info[b][a] = info[a][b];
            }
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < PROBIT_TOL * (n as f64).max(1.0) {
            return Ok(model(columns, &kept, &dropped, &beta, it));
        }
        let step = cholesky_solve(&info, &grad)?;
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let ce = index(&cand);
            let cl = quasi_ll(&ce, y);
            if cl >= ll {
                last_step = t * step.iter().map(|s| s * s).sum::<f64>().sqrt();
                beta = cand;
                eta = ce;
                ll = cl;
                improved = true;
                break;
            }
            t /= 2.0;
        }
        if !improved {
            return Err(Error::NonConvergence {
                what: "fractional probit",
                iterations: it,
                last_step,
                gradient_norm: gnorm,
            });
        }
        if last_step < 1e-14 {
            return Ok(model(columns, &kept, &dropped, &beta, it + 1));
        }
    }
    Err(Error::NonConvergence {
        what: "fractional probit",
        iterations: PROBIT_MAX_ITER,
        last_step,
        gradient_norm: f64::NAN,
    })
}

fn probit_start(m: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let m = m.clamp(1e-6, 1.0 - 1e-6);
    Normal::standard().inverse_cdf(m)
}

fn model(columns: &[String], kept: &[usize], dropped: &[usize], beta: &[f64], iterations: usize) -> ProbitModel {
    let mut coefficients = vec![0.0; columns.len()];
    for (t, &j) in kept.iter().enumerate() {
        coefficients[j] = beta[t + 1];
    }
    ProbitModel {
        index: LinearModel {
            columns: columns.to_vec(),
            intercept: beta[0],
            coefficients,
            dropped: dropped.iter().map(|&j| columns[j].clone()).collect(),
        },
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intercept_only_half() {
        let y = [0.0, 1.0, 0.5, 0.5];
        let m = fractional_probit_fit(&Matrix::zeros(4, 0), &y, &[]).unwrap();
        assert!(m.index.intercept.abs() < 1e-9);
    }

    #[test]
    fn intercept_only_root() {
        let y = [0.0, 0.0, 1.0, 0.3, 0.0, 1.0, 0.05];
        let mean = y.iter().sum::<f64>() / 7.0;
        let m = fractional_probit_fit(&Matrix::zeros(7, 0), &y, &[]).unwrap();
        // bisection on Phi(a) = mean
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = (lo + hi) / 2.0;
            if norm_cdf(mid) < mean {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((m.index.intercept - lo).abs() < 1e-6);
    }

    #[test]
    fn slope_and_collinearity() {
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 2.0],
            vec![2.0, 4.0],
            vec![3.0, 6.0],
            vec![4.0, 8.0],
        ])
        .unwrap();
        let y = [0.0, 0.1, 0.5, 0.8, 1.0];
        let m = fractional_probit_fit(&x, &y, &["a".into(), "b".into()]).unwrap();
        assert_eq!(m.index.dropped, vec!["b".to_string()]);
        assert!(m.index.coefficients[0] > 0.0);
        let p = m.predict(&x);
        assert!(p.iter().all(|v| *v > 0.0 && *v < 1.0));
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(fractional_probit_fit(&Matrix::zeros(2, 0), &[0.5, 1.5], &[]).is_err());
    }
}
