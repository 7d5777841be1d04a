//! Binary soft-margin SVM trained on the dual by SMO with maximal violating
//! pair selection.
//!
//! Labels are `-1` (class A) and `+1` (class B). The decision value
//! `sum_i coef_i k(sv_i, x) + bias` is returned unthresholded so that it can
//! feed an AUC.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{FinderError, Result};

pub const DEFAULT_COST: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 10_000_000;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => x.iter().zip(z).map(|(a, b)| a * b).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// Kernel family as named on the command line; `gamma` is resolved later.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Linear,
    Rbf,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::Linear => "linear",
            KernelKind::Rbf => "rbf",
        })
    }
}

impl FromStr for KernelKind {
    type Err = FinderError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "rbf" | "radial" => Ok(KernelKind::Rbf),
            _ => Err(FinderError::InvalidParameter(format!(
                "unknown kernel '{s}' (expected linear or rbf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// K x M, one support vector per row.
    pub support_vectors: DMatrix<f64>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coefficients: DVector<f64>,
    pub bias: f64,
    pub kernel: Kernel,
    pub cost: f64,
    pub iterations: usize,
}

impl SvmModel {
    pub fn n_features(&self) -> usize {
        self.support_vectors.ncols()
    }

    /// `sum_i alpha_i - 1/2 sum_ij alpha_i alpha_j y_i y_j k(x_i, x_j)`.
    pub fn dual_objective(&self) -> f64 {
        let k = gram(&self.support_vectors, &self.kernel);
        let c = &self.dual_coefficients;
        c.abs().sum() - 0.5 * c.dot(&(&k * c))
    }

    /// Ambient weight vector, available for the linear kernel only.
    pub fn linear_weights(&self) -> Option<DVector<f64>> {
        match self.kernel {
            Kernel::Linear => Some(self.support_vectors.tr_mul(&self.dual_coefficients)),
            Kernel::Rbf { .. } => None,
        }
    }
}

fn gram(x: &DMatrix<f64>, kernel: &Kernel) -> DMatrix<f64> {
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&rows[i], &rows[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// `1 / (M * var)` where `var` is the mean per-column sample variance.
pub fn default_gamma(features: &DMatrix<f64>) -> f64 {
    let (n, m) = features.shape();
    if m == 0 {
        return 1.0;
    }
    let var = if n < 2 {
        0.0
    } else {
        features
            .column_iter()
            .map(|c| {
                let mu = c.mean();
                c.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1) as f64
            })
            .sum::<f64>()
            / m as f64
    };
    if var > 0.0 && var.is_finite() {
        1.0 / (m as f64 * var)
    } else {
        1.0 / m as f64
    }
}

pub fn svm_train(
    features: &DMatrix<f64>,
    labels: &[f64],
    kernel: Kernel,
    cost: f64,
    tol: f64,
) -> Result<SvmModel> {
    svm_train_with_limit(features, labels, kernel, cost, tol, DEFAULT_MAX_ITER)
}

pub fn svm_train_with_limit(
    features: &DMatrix<f64>,
    labels: &[f64],
    kernel: Kernel,
    cost: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SvmModel> {
    let n = features.nrows();
    if labels.len() != n {
        return Err(FinderError::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    if cost.is_nan() || cost <= 0.0 || tol.is_nan() || tol <= 0.0 {
        return Err(FinderError::InvalidParameter(format!(
            "cost and tol must be positive (cost = {cost}, tol = {tol})"
        )));
    }
    if let Kernel::Rbf { gamma } = kernel {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(FinderError::InvalidParameter(format!(
                "RBF gamma must be positive, got {gamma}"
            )));
        }
    }
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(FinderError::InvalidParameter(
            "labels must be -1 or +1".into(),
        ));
    }
    if !(labels.contains(&1.0) && labels.contains(&-1.0)) {
        return Err(FinderError::SingleClass);
    }

    let y = labels;
    let k = gram(features, &kernel);
    let q = |i: usize, j: usize| y[i] * y[j] * k[(i, j)];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < cost) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < cost);

    let mut iterations = 0;
    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tol {
            break;
        }
        if iterations >= max_iter {
            return Err(FinderError::NoConvergence { iterations });
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > cost {
                    alpha[i] = cost;
                    alpha[j] = cost - diff;
                }
            } else if alpha[j] > cost {
                alpha[j] = cost;
                alpha[i] = cost + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > cost {
                if alpha[i] > cost {
                    alpha[i] = cost;
                    alpha[j] = sum - cost;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cost {
                if alpha[j] > cost {
                    alpha[j] = cost;
                    alpha[i] = sum - cost;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    // rho from the free vectors, or the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= cost {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        0.5 * (ub + lb)
    };

    let support: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    let coefs = DVector::from_iterator(support.len(), support.iter().map(|&t| alpha[t] * y[t]));
    Ok(SvmModel {
        support_vectors: features.select_rows(&support),
        dual_coefficients: coefs,
        bias: -rho,
        kernel,
        cost,
        iterations,
    })
}

/// Decision values for every row of `features`.
pub fn svm_score(model: &SvmModel, features: &DMatrix<f64>) -> Result<DVector<f64>> {
    if features.ncols() != model.n_features() && model.support_vectors.nrows() > 0 {
        return Err(FinderError::DimensionMismatch {
            expected: model.n_features(),
            found: features.ncols(),
        });
    }
    let svs: Vec<Vec<f64>> = model
        .support_vectors
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    let scores = features.row_iter().map(|row| {
        let x: Vec<f64> = row.iter().copied().collect();
        svs.iter()
            .zip(model.dual_coefficients.iter())
            .map(|(sv, c)| c * model.kernel.eval(sv, &x))
            .sum::<f64>()
            + model.bias
    });
    Ok(DVector::from_iterator(features.nrows(), scores))
}
