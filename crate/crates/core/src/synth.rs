//! Samples drawn from a prescribed Karhunen-Loeve expansion,
//! `v = mean + sum_r sqrt(lambda_r) y_r phi_r`.
//!
//! The coefficients `y_r` are independent draws from a zero-mean,
//! unit-variance law. The generator is ChaCha8 seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`, and within a sample the coefficients
//! are drawn in mode order, so a given spec reproduces the same rows on every
//! platform.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{format_list, parse_kv, parse_list};
use crate::dataset::{ClassLabel, Dataset};
use crate::error::{FinderError, Result};
use crate::kle::Eigensystem;

const ORTHONORMAL_TOL: f64 = 1e-10;
const CLASS_B_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

/// Law of the expansion coefficients; each has mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoefficientLaw {
    StandardGaussian,
    /// +1 or -1 with equal probability.
    Rademacher,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    UniformSym,
}

impl CoefficientLaw {
    pub const ALL: [CoefficientLaw; 3] = [
        CoefficientLaw::StandardGaussian,
        CoefficientLaw::Rademacher,
        CoefficientLaw::UniformSym,
    ];

    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            CoefficientLaw::StandardGaussian => rng.sample(StandardNormal),
            CoefficientLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            CoefficientLaw::UniformSym => {
                let h = 3f64.sqrt();
                rng.random_range(-h..h)
            }
        }
    }
}

impl fmt::Display for CoefficientLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoefficientLaw::StandardGaussian => "gaussian",
            CoefficientLaw::Rademacher => "rademacher",
            CoefficientLaw::UniformSym => "uniform",
        })
    }
}

impl FromStr for CoefficientLaw {
    type Err = FinderError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(CoefficientLaw::StandardGaussian),
            "rademacher" => Ok(CoefficientLaw::Rademacher),
            "uniform" => Ok(CoefficientLaw::UniformSym),
            _ => Err(FinderError::InvalidParameter(format!(
                "unknown coefficient law '{s}' (expected gaussian, rademacher or uniform)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub mean: DVector<f64>,
    pub eigenvalues: DVector<f64>,
    /// F x R with orthonormal columns.
    pub eigenvectors: DMatrix<f64>,
    pub coefficient_law: CoefficientLaw,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(
        mean: DVector<f64>,
        eigenvalues: DVector<f64>,
        eigenvectors: DMatrix<f64>,
        coefficient_law: CoefficientLaw,
        seed: u64,
    ) -> Result<Self> {
        let spec = Self {
            mean,
            eigenvalues,
            eigenvectors,
            coefficient_law,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (f, r) = self.eigenvectors.shape();
        if f != self.mean.len() {
            return Err(FinderError::DimensionMismatch {
                expected: self.mean.len(),
                found: f,
            });
        }
        if r != self.eigenvalues.len() {
            return Err(FinderError::DimensionMismatch {
                expected: self.eigenvalues.len(),
                found: r,
            });
        }
        if self
            .eigenvalues
            .iter()
            .any(|l| !(l.is_finite() && *l >= 0.0))
        {
            return Err(FinderError::InvalidParameter(
                "eigenvalues must be finite and non-negative".into(),
            ));
        }
        if self.eigenvalues.as_slice().windows(2).any(|w| w[1] > w[0]) {
            return Err(FinderError::InvalidParameter(
                "eigenvalues must be non-increasing".into(),
            ));
        }
        if r > 0 {
            let err =
                (self.eigenvectors.tr_mul(&self.eigenvectors) - DMatrix::identity(r, r)).amax();
            if err > ORTHONORMAL_TOL {
                return Err(FinderError::InvalidParameter(format!(
                    "eigenvectors are not orthonormal (max deviation {err:e})"
                )));
            }
        }
        Ok(())
    }

    /// `sum_r lambda_r phi_r phi_r^T`.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.eigenvectors
            * DMatrix::from_diagonal(&self.eigenvalues)
            * self.eigenvectors.transpose()
    }

    /// The exact eigen-system of the spec.
    pub fn eigensystem(&self) -> Eigensystem {
        Eigensystem {
            mean: self.mean.clone(),
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors: self.eigenvectors.clone(),
            effective_rank: self.eigenvalues.iter().filter(|&&l| l > 0.0).count(),
        }
    }

    /// Flat `key = value` serialization, readable by [`SynthSpec::from_config`].
    pub fn to_config(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("law = {}\n", self.coefficient_law));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("mean = {}\n", format_list(self.mean.iter())));
        out.push_str(&format!(
            "eigenvalues = {}\n",
            format_list(self.eigenvalues.iter())
        ));
        for (r, col) in self.eigenvectors.column_iter().enumerate() {
            out.push_str(&format!("eigenvector.{r} = {}\n", format_list(col.iter())));
        }
        out
    }

    pub fn from_config(text: &str) -> Result<Self> {
        let mut law = CoefficientLaw::StandardGaussian;
        let mut seed = 0u64;
        let mut mean = None;
        let mut eigenvalues: Option<Vec<f64>> = None;
        let mut vectors: Vec<(usize, Vec<f64>)> = Vec::new();
        for (key, value) in parse_kv(text)? {
            match key.as_str() {
                "law" => law = value.parse()?,
                "seed" => {
                    seed = value
                        .parse()
                        .map_err(|_| FinderError::Format(format!("bad seed '{value}'")))?
                }
                "mean" => mean = Some(parse_list(&value)?),
                "eigenvalues" => eigenvalues = Some(parse_list(&value)?),
                k if k.starts_with("eigenvector.") => {
                    let idx = k["eigenvector.".len()..]
                        .parse()
                        .map_err(|_| FinderError::Format(format!("bad key '{k}'")))?;
                    vectors.push((idx, parse_list(&value)?));
                }
                other => return Err(FinderError::Format(format!("unknown key '{other}'"))),
            }
        }
        let mean = mean.ok_or_else(|| FinderError::Format("missing key 'mean'".into()))?;
        let eigenvalues = eigenvalues.unwrap_or_default();
        let f = mean.len();
        let r = eigenvalues.len();
        vectors.sort_by_key(|(i, _)| *i);
        if vectors.len() != r || vectors.iter().enumerate().any(|(k, (i, _))| *i != k) {
            return Err(FinderError::Format(format!(
                "expected eigenvector.0 .. eigenvector.{} to match the eigenvalue count",
                r as isize - 1
            )));
        }
        let mut phi = DMatrix::zeros(f, r);
        for (k, (_, v)) in vectors.iter().enumerate() {
            if v.len() != f {
                return Err(FinderError::DimensionMismatch {
                    expected: f,
                    found: v.len(),
                });
            }
            phi.set_column(k, &DVector::from_column_slice(v));
        }
        Self::new(
            DVector::from_vec(mean),
            DVector::from_vec(eigenvalues),
            phi,
            law,
            seed,
        )
    }
}

/// `n` samples as rows of an n x F matrix.
pub fn sample_matrix(spec: &SynthSpec, n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(FinderError::InvalidParameter(
            "sample count must be >= 1".into(),
        ));
    }
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let f = spec.dim();
    let r = spec.eigenvalues.len();
    let scales: Vec<f64> = spec.eigenvalues.iter().map(|l| l.sqrt()).collect();
    let mut out = DMatrix::zeros(n, f);
    let mut coeffs = DVector::zeros(r);
    for i in 0..n {
        for k in 0..r {
            coeffs[k] = scales[k] * spec.coefficient_law.draw(&mut rng);
        }
        let row = &spec.mean + &spec.eigenvectors * &coeffs;
        out.set_row(i, &row.transpose());
    }
    Ok(out)
}

pub fn sample(spec: &SynthSpec, n: usize) -> Result<Dataset> {
    Dataset::new(sample_matrix(spec, n)?, None)
}

/// Two classes sharing `shared_mean` with different spectral profiles.
///
/// Class A uses the axes `e_0 .. e_{R_A - 1}`. Class B reuses the first
/// `overlap_dims` of those and places its remaining modes on the next unused
/// axes, orthogonal to A's span. Class B's seed is derived from `seed`.
pub fn two_class_scenario(
    f: usize,
    shared_mean: &DVector<f64>,
    a_spectrum: &[f64],
    b_spectrum: &[f64],
    overlap_dims: usize,
    seed: u64,
) -> Result<(SynthSpec, SynthSpec)> {
    if shared_mean.len() != f {
        return Err(FinderError::DimensionMismatch {
            expected: f,
            found: shared_mean.len(),
        });
    }
    let (ra, rb) = (a_spectrum.len(), b_spectrum.len());
    if overlap_dims > ra.min(rb) {
        return Err(FinderError::InvalidParameter(format!(
            "overlap_dims = {overlap_dims} exceeds min(R_A, R_B) = {}",
            ra.min(rb)
        )));
    }
    let used = ra + rb - overlap_dims;
    if used > f {
        return Err(FinderError::InvalidParameter(format!(
            "spectra need {used} orthogonal directions but F = {f}"
        )));
    }
    let mut phi_a = DMatrix::zeros(f, ra);
    for k in 0..ra {
        phi_a[(k, k)] = 1.0;
    }
    let mut phi_b = DMatrix::zeros(f, rb);
    for k in 0..rb {
        let axis = if k < overlap_dims {
            k
        } else {
            ra + k - overlap_dims
        };
        phi_b[(axis, k)] = 1.0;
    }
    let law = CoefficientLaw::StandardGaussian;
    let a = SynthSpec::new(
        shared_mean.clone(),
        DVector::from_column_slice(a_spectrum),
        phi_a,
        law,
        seed,
    )?;
    let b = SynthSpec::new(
        shared_mean.clone(),
        DVector::from_column_slice(b_spectrum),
        phi_b,
        law,
        seed.wrapping_add(CLASS_B_SEED_OFFSET),
    )?;
    Ok((a, b))
}

/// `n_a` class-A rows followed by `n_b` class-B rows.
pub fn labeled_dataset(a: &SynthSpec, b: &SynthSpec, n_a: usize, n_b: usize) -> Result<Dataset> {
    if a.dim() != b.dim() {
        return Err(FinderError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let xa = sample_matrix(a, n_a)?;
    let xb = sample_matrix(b, n_b)?;
    let f = a.dim();
    let mut values = DMatrix::zeros(n_a + n_b, f);
    values.rows_mut(0, n_a).copy_from(&xa);
    values.rows_mut(n_a, n_b).copy_from(&xb);
    let mut labels = vec![ClassLabel::A; n_a];
    labels.extend(std::iter::repeat_n(ClassLabel::B, n_b));
    Dataset::new(values, Some(labels))
}
