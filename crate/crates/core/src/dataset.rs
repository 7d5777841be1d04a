//! Tabular sample container shared by every stage of the pipeline.

use nalgebra::DMatrix;

use crate::error::{FinderError, Result};

/// Class tag. `A` is the reference ("normal") class the features are centered
/// on; `B` is the anomalous, positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    A,
    B,
}

impl ClassLabel {
    /// Signed SVM target: `A -> -1`, `B -> +1`.
    pub fn sign(self) -> f64 {
        match self {
            ClassLabel::A => -1.0,
            ClassLabel::B => 1.0,
        }
    }
}

/// N x F sample matrix (rows are samples) with optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub values: DMatrix<f64>,
    pub labels: Option<Vec<ClassLabel>>,
    pub feature_names: Vec<String>,
    pub missing_mask: DMatrix<bool>,
}

impl Dataset {
    /// Builds a fully observed dataset with generated feature names `f0, f1, ...`.
    pub fn new(values: DMatrix<f64>, labels: Option<Vec<ClassLabel>>) -> Result<Self> {
        let names = (0..values.ncols()).map(|j| format!("f{j}")).collect();
        Self::with_names(values, labels, names)
    }

    pub fn with_names(
        values: DMatrix<f64>,
        labels: Option<Vec<ClassLabel>>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let (n, f) = values.shape();
        let mask = DMatrix::from_element(n, f, false);
        Self::from_parts(values, labels, feature_names, mask)
    }

    pub fn from_parts(
        values: DMatrix<f64>,
        labels: Option<Vec<ClassLabel>>,
        feature_names: Vec<String>,
        missing_mask: DMatrix<bool>,
    ) -> Result<Self> {
        let (n, f) = values.shape();
        if n == 0 {
            return Err(FinderError::Empty("dataset has no rows"));
        }
        if f == 0 {
            return Err(FinderError::Empty("dataset has no feature columns"));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(FinderError::DimensionMismatch {
                    expected: n,
                    found: l.len(),
                });
            }
        }
        if feature_names.len() != f {
            return Err(FinderError::DimensionMismatch {
                expected: f,
                found: feature_names.len(),
            });
        }
        if missing_mask.shape() != (n, f) {
            return Err(FinderError::DimensionMismatch {
                expected: n * f,
                found: missing_mask.len(),
            });
        }
        Ok(Self {
            values,
            labels,
            feature_names,
            missing_mask,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn has_missing(&self) -> bool {
        self.missing_mask.iter().any(|&m| m)
    }

    /// Row indices belonging to `class`, in stored order.
    pub fn class_rows(&self, class: ClassLabel) -> Result<Vec<usize>> {
        let labels = self
            .labels
            .as_ref()
            .ok_or(FinderError::Empty("dataset is unlabeled"))?;
        Ok(labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect())
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let values = self.values.select_rows(rows);
        let mask = self.missing_mask.select_rows(rows);
        let labels = self
            .labels
            .as_ref()
            .map(|l| rows.iter().map(|&i| l[i]).collect());
        Self::from_parts(values, labels, self.feature_names.clone(), mask)
    }
}
