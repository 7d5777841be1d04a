//! Residual-eigenspace feature construction for binary classification on
//! noisy, high-dimensional, small-sample data.
//!
//! The reference class A is summarised by its empirical Karhunen-Loeve
//! expansion ([`kle`]). Samples are centered on the class-A mean and projected
//! onto a residual subspace of the orthogonal complement of the leading
//! class-A modes ([`subspace`]), where the anomalous class B is expected to
//! look different. The projected coefficients feed a soft-margin SVM
//! ([`svm`]) inside a leave-pair-out cross-validation harness
//! ([`evaluation`]). [`bounds`] evaluates the distribution-free concentration
//! bounds that motivate the construction, and [`synth`] samples data with a
//! prescribed expansion for testing.

pub mod bounds;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod impute;
pub mod io;
pub mod kle;
pub mod subspace;
pub mod svm;
pub mod synth;

#[cfg(test)]
mod test_util;

pub use dataset::{ClassLabel, Dataset};
pub use error::{ErrorKind, FinderError, Result};
pub use kle::Eigensystem;
pub use subspace::{FeatureTransform, SubspaceBasis, Variant};
