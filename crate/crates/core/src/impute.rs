//! k-nearest-neighbour imputation of missing cells.

use nalgebra::DMatrix;

use crate::dataset::Dataset;
use crate::error::{FinderError, Result};

pub const DEFAULT_K: usize = 5;

/// Imputes the values of `values` flagged in `mask`.
///
/// For each missing cell `(i, j)`, the donors are the other rows with column
/// `j` observed, ranked by Euclidean distance to row `i` over the
/// coordinates both rows observe (ties by row index). The cell becomes the
/// mean of column `j` over the `k` nearest donors. Rows sharing no observed
/// coordinate with row `i` rank last.
pub fn knn_impute_values(
    values: &DMatrix<f64>,
    mask: &DMatrix<bool>,
    names: &[String],
    k: usize,
) -> Result<DMatrix<f64>> {
    if k == 0 {
        return Err(FinderError::InvalidParameter("k must be >= 1".into()));
    }
    let (n, f) = values.shape();
    for j in 0..f {
        if (0..n).all(|i| mask[(i, j)]) {
            return Err(FinderError::FullyMissingColumn(
                names.get(j).cloned().unwrap_or_else(|| format!("#{j}")),
            ));
        }
    }
    let mut out = values.clone();
    for i in 0..n {
        if !(0..f).any(|j| mask[(i, j)]) {
            continue;
        }
        let mut dist: Vec<(f64, usize)> = (0..n)
            .filter(|&r| r != i)
            .map(|r| {
                let mut shared = 0;
                let mut d2 = 0.0;
                for c in 0..f {
                    if !mask[(i, c)] && !mask[(r, c)] {
                        shared += 1;
                        let d = values[(i, c)] - values[(r, c)];
                        d2 += d * d;
                    }
                }
                (
                    if shared == 0 {
                        f64::INFINITY
                    } else {
                        d2.sqrt()
                    },
                    r,
                )
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for j in 0..f {
            if !mask[(i, j)] {
                continue;
            }
            let donors: Vec<f64> = dist
                .iter()
                .filter(|(_, r)| !mask[(*r, j)])
                .take(k)
                .map(|(_, r)| values[(*r, j)])
                .collect();
            // non-empty: the column has an observed value and row i is not it
            out[(i, j)] = donors.iter().sum::<f64>() / donors.len() as f64;
        }
    }
    Ok(out)
}

/// Returns a copy of `data` with every missing cell imputed and the mask
/// cleared.
pub fn knn_impute(data: &Dataset, k: usize) -> Result<Dataset> {
    let values = knn_impute_values(&data.values, &data.missing_mask, &data.feature_names, k)?;
    let (n, f) = values.shape();
    Ok(Dataset {
        values,
        missing_mask: DMatrix::from_element(n, f, false),
        ..data.clone()
    })
}
