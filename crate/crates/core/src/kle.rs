//! Empirical Karhunen-Loeve expansion of one class: mean, covariance
//! operator and its eigen-system.
//!
//! All estimators use the unbiased `N - 1` divisor. Two routes to the
//! eigen-pairs are provided: the direct F x F covariance route and the dual
//! N x N Gram route, which is the cheaper one whenever `N < F`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dataset::Dataset;
use crate::error::{FinderError, Result};

/// Eigenvalues below `DEFAULT_RANK_TOL * lambda_max` are treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Relative asymmetry accepted by [`eigendecompose`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigen-pairs of an empirical covariance operator, largest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub mean: DVector<f64>,
    /// Non-negative, non-increasing.
    pub eigenvalues: DVector<f64>,
    /// F x R, orthonormal columns, column `r` pairs with `eigenvalues[r]`.
    pub eigenvectors: DMatrix<f64>,
    pub effective_rank: usize,
}

impl Eigensystem {
    /// Ambient dimension F.
    pub fn dim(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// Number of stored eigen-pairs R.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// The leading `m` eigenvectors as an F x m matrix.
    pub fn leading(&self, m: usize) -> DMatrix<f64> {
        self.eigenvectors.columns(0, m.min(self.len())).into_owned()
    }

    /// `sum_r lambda_r phi_r phi_r^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = &self.eigenvectors * DMatrix::from_diagonal(&self.eigenvalues);
        scaled * self.eigenvectors.transpose()
    }

    pub fn with_mean(mut self, mean: DVector<f64>) -> Result<Self> {
        check_len(self.dim(), mean.len())?;
        self.mean = mean;
        Ok(self)
    }

    fn from_unsorted(values: &DVector<f64>, vectors: &DMatrix<f64>, rank_tol: f64) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));

        let lambda_max = order.first().map_or(0.0, |&i| values[i]).max(0.0);
        let floor = rank_tol * lambda_max;

        let f = vectors.nrows();
        let mut eigenvalues = DVector::zeros(order.len());
        let mut eigenvectors = DMatrix::zeros(f, order.len());
        let mut effective_rank = 0;
        for (dst, &src) in order.iter().enumerate() {
            let lambda = values[src];
            if lambda_max > 0.0 && lambda > floor {
                eigenvalues[dst] = lambda;
                effective_rank += 1;
            }
            let mut col = vectors.column(src).into_owned();
            fix_sign(&mut col);
            eigenvectors.set_column(dst, &col);
        }
        Self {
            mean: DVector::zeros(f),
            eigenvalues,
            eigenvectors,
            effective_rank,
        }
    }
}

/// Flips `v` so that its first largest-magnitude component is positive.
pub(crate) fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(FinderError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Subtracts `mean` from every row.
pub fn center_rows(rows: &DMatrix<f64>, mean: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_len(rows.ncols(), mean.len())?;
    let mut out = rows.clone();
    for mut row in out.row_iter_mut() {
        row -= mean.transpose();
    }
    Ok(out)
}

/// Column-wise arithmetic mean of the rows.
pub fn row_mean(rows: &DMatrix<f64>) -> Result<DVector<f64>> {
    if rows.nrows() == 0 {
        return Err(FinderError::Empty("cannot average zero samples"));
    }
    Ok(rows.row_mean().transpose())
}

/// `1/(N-1) sum_i (x_i - mean)(x_i - mean)^T`.
pub fn row_covariance(rows: &DMatrix<f64>, mean: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = rows.nrows();
    if n < 2 {
        return Err(FinderError::InsufficientSamples {
            what: "covariance estimate",
            needed: 2,
            found: n,
        });
    }
    let centered = center_rows(rows, mean)?;
    let mut cov = centered.tr_mul(&centered) / (n - 1) as f64;
    symmetrize(&mut cov);
    Ok(cov)
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Subtracts `reference_mean` from every sample, keeping labels and mask.
pub fn center(data: &Dataset, reference_mean: &DVector<f64>) -> Result<Dataset> {
    let values = center_rows(&data.values, reference_mean)?;
    Ok(Dataset {
        values,
        ..data.clone()
    })
}

pub fn empirical_mean(data: &Dataset) -> Result<DVector<f64>> {
    row_mean(&data.values)
}

/// Unbiased covariance about `mean`. Pass a zero mean for rows that are
/// already centered.
pub fn empirical_covariance(data: &Dataset, mean: &DVector<f64>) -> Result<DMatrix<f64>> {
    row_covariance(&data.values, mean)
}

/// Full eigen-decomposition of a symmetric matrix.
///
/// Eigenvalues come back in descending order; those below
/// `rank_tol * lambda_max` (and any negative round-off) are clamped to zero
/// and excluded from `effective_rank`. Every eigenvector is kept, so the
/// result has R = F columns.
pub fn eigendecompose(cov: &DMatrix<f64>, rank_tol: f64) -> Result<Eigensystem> {
    if !cov.is_square() {
        return Err(FinderError::DimensionMismatch {
            expected: cov.nrows(),
            found: cov.ncols(),
        });
    }
    if cov.nrows() == 0 {
        return Err(FinderError::Empty("zero-dimensional covariance"));
    }
    if rank_tol.is_nan() || rank_tol < 0.0 {
        return Err(FinderError::InvalidParameter(format!(
            "rank tolerance must be >= 0, got {rank_tol}"
        )));
    }
    let scale = cov.amax().max(1.0);
    let asym = (cov - cov.transpose()).amax();
    if asym > SYMMETRY_TOL * scale || !asym.is_finite() {
        return Err(FinderError::NotSymmetric {
            max_asymmetry: asym,
        });
    }
    let mut sym = cov.clone();
    symmetrize(&mut sym);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or(FinderError::NoConvergence { iterations: 0 })?;
    Ok(Eigensystem::from_unsorted(
        &eig.eigenvalues,
        &eig.eigenvectors,
        rank_tol,
    ))
}

/// Eigen-pairs of the covariance of already-centered rows through the N x N
/// Gram matrix `X X^T / (N-1)`.
///
/// Only the non-zero pairs are returned (at most N - 1 for centered data);
/// each eigenvector is lifted as `X^T u / |X^T u|`.
pub fn eigendecompose_dual(centered: &DMatrix<f64>, rank_tol: f64) -> Result<Eigensystem> {
    let n = centered.nrows();
    if n < 2 {
        return Err(FinderError::InsufficientSamples {
            what: "dual eigen-decomposition",
            needed: 2,
            found: n,
        });
    }
    let mut gram = centered * centered.transpose() / (n - 1) as f64;
    symmetrize(&mut gram);
    let small = eigendecompose(&gram, rank_tol)?;
    let r = small.effective_rank;
    let f = centered.ncols();
    let mut vectors = DMatrix::zeros(f, r);
    let mut values = DVector::zeros(r);
    for k in 0..r {
        let mut lifted = centered.tr_mul(&small.eigenvectors.column(k));
        let norm = lifted.norm();
        if norm == 0.0 {
            return Err(FinderError::RankDeficient {
                requested: r,
                available: k,
            });
        }
        lifted /= norm;
        fix_sign(&mut lifted);
        vectors.set_column(k, &lifted);
        values[k] = small.eigenvalues[k];
    }
    Ok(Eigensystem {
        mean: DVector::zeros(f),
        eigenvalues: values,
        eigenvectors: vectors,
        effective_rank: r,
    })
}

/// Estimates the KLE of `rows` about `mean`, using the dual route when there
/// are fewer samples than features.
pub fn estimate(rows: &DMatrix<f64>, mean: &DVector<f64>, rank_tol: f64) -> Result<Eigensystem> {
    let centered = center_rows(rows, mean)?;
    let eig = if rows.nrows() < rows.ncols() {
        eigendecompose_dual(&centered, rank_tol)?
    } else {
        let n = rows.nrows();
        if n < 2 {
            return Err(FinderError::InsufficientSamples {
                what: "covariance estimate",
                needed: 2,
                found: n,
            });
        }
        let mut cov = centered.tr_mul(&centered) / (n - 1) as f64;
        symmetrize(&mut cov);
        eigendecompose(&cov, rank_tol)?
    };
    eig.with_mean(mean.clone())
}

/// Squared projection error of the best `m`-term truncation,
/// `sum_{r > m} lambda_r`.
pub fn truncation_error(eig: &Eigensystem, m: usize) -> Result<f64> {
    if m > eig.len() {
        return Err(FinderError::InvalidParameter(format!(
            "truncation {m} exceeds the {} available eigen-pairs",
            eig.len()
        )));
    }
    Ok(eig.eigenvalues.iter().skip(m).sum())
}

/// Smallest `M` whose leading eigenvalues capture `fraction` of the total.
pub fn energy_truncation(eig: &Eigensystem, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(FinderError::InvalidParameter(format!(
            "energy fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let cumulative: Vec<f64> = eig
        .eigenvalues
        .iter()
        .scan(0.0, |acc, &l| {
            *acc += l;
            Some(*acc)
        })
        .collect();
    let total = cumulative.last().copied().unwrap_or(0.0);
    if total <= 0.0 {
        return Err(FinderError::InvalidParameter(
            "spectrum has no positive eigenvalue".into(),
        ));
    }
    let target = fraction * total;
    Ok(cumulative.iter().position(|&c| c >= target).unwrap() + 1)
}
