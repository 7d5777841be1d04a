//! Distribution-free Markov concentration bounds for projected samples.
//!
//! For an orthonormal set `{s_m}` and a class with eigen-pairs
//! `(lambda_r, phi_r)`,
//!
//! ```text
//! Pr(|P_S (v - E v)|^2 >= eps^2) <= eps^-2 sum_m sum_r lambda_r <phi_r, s_m>^2
//! ```
//!
//! Values above 1 are returned as computed.

use nalgebra::DMatrix;

use crate::error::{FinderError, Result};
use crate::kle::Eigensystem;
use crate::subspace::SubspaceBasis;

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovBound {
    pub epsilon: f64,
    pub rhs: f64,
    /// M_res x R matrix of `lambda_r <phi_r, s_m>^2`, R = effective rank.
    pub per_term: DMatrix<f64>,
}

impl MarkovBound {
    /// The double sum without the `eps^-2` factor, i.e. the expected squared
    /// norm of the projected, centered sample.
    pub fn expected_energy(&self) -> f64 {
        self.per_term.sum()
    }
}

pub fn markov_rhs(eig: &Eigensystem, basis: &SubspaceBasis, epsilon: f64) -> Result<MarkovBound> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(FinderError::InvalidParameter(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    if basis.ambient_dim() != eig.dim() {
        return Err(FinderError::DimensionMismatch {
            expected: eig.dim(),
            found: basis.ambient_dim(),
        });
    }
    let r = eig.effective_rank;
    let phi = eig.eigenvectors.columns(0, r);
    let mut per_term = basis.vectors.tr_mul(&phi);
    for (k, mut col) in per_term.column_iter_mut().enumerate() {
        let lambda = eig.eigenvalues[k];
        col.apply(|c| *c = lambda * *c * *c);
    }
    let rhs = per_term.sum() / (epsilon * epsilon);
    Ok(MarkovBound {
        epsilon,
        rhs,
        per_term,
    })
}

/// `sum_{r > m_a} lambda_r`, which dominates the double sum for any
/// orthonormal set inside the complement of the leading `m_a` modes.
pub fn tail_bound(eig: &Eigensystem, m_a: usize) -> Result<f64> {
    if m_a > eig.len() {
        return Err(FinderError::InvalidParameter(format!(
            "M_A = {m_a} exceeds the {} available eigen-pairs",
            eig.len()
        )));
    }
    Ok(eig.eigenvalues.iter().skip(m_a).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::{complement_basis, BasisKind};
    use crate::test_util::*;
    use nalgebra::DVector;

    fn basis(vectors: DMatrix<f64>) -> SubspaceBasis {
        let m = vectors.ncols();
        SubspaceBasis {
            vectors,
            variant: BasisKind::Complement,
            parent_dims: (0, m),
        }
    }

    #[test]
    fn orthogonal_basis_gives_zero() {
        let e = eig_from_spectrum(&[3.0, 2.0, 0.0, 0.0]);
        let mut v = DMatrix::zeros(4, 2);
        v[(2, 0)] = 1.0;
        v[(3, 1)] = 1.0;
        let b = markov_rhs(&e, &basis(v), 0.5).unwrap();
        assert_eq!(b.rhs, 0.0);
    }

    #[test]
    fn single_mode_collapses_to_eigenvalue() {
        let e = eig_from_spectrum(&[3.0, 2.0, 1.0]);
        let v = e.leading(1);
        let b = markov_rhs(&e, &basis(v), 1.0).unwrap();
        assert!((b.rhs - 3.0).abs() < 1e-15);
    }

    #[test]
    fn matches_double_loop() {
        let phi = random_orthonormal(7, 7, 3);
        let spectrum = [4.0, 3.0, 2.5, 1.0, 0.5, 0.25, 0.125];
        let e = crate::kle::Eigensystem {
            mean: DVector::zeros(7),
            eigenvalues: DVector::from_column_slice(&spectrum),
            eigenvectors: phi,
            effective_rank: 7,
        };
        let s = random_orthonormal(7, 3, 4);
        let eps = 0.8;
        let b = markov_rhs(&e, &basis(s.clone()), eps).unwrap();
        let mut oracle = 0.0;
        for m in 0..3 {
            for (r, lambda) in spectrum.iter().enumerate() {
                let mut dot = 0.0;
                for i in 0..7 {
                    dot += e.eigenvectors[(i, r)] * s[(i, m)];
                }
                oracle += lambda * dot * dot;
            }
        }
        oracle /= eps * eps;
        assert!((b.rhs - oracle).abs() < 1e-12);
        assert!((b.rhs - b.expected_energy() / (eps * eps)).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        let e = eig_from_spectrum(&[1.0]);
        let v = e.leading(1);
        assert!(markov_rhs(&e, &basis(v.clone()), 0.0).is_err());
        assert!(markov_rhs(&e, &basis(v), -1.0).is_err());
    }

    #[test]
    fn rhs_non_increasing_in_epsilon() {
        let e = eig_from_spectrum(&[3.0, 2.0, 1.0]);
        let b = basis(random_orthonormal(3, 2, 6));
        let mut prev = f64::INFINITY;
        for k in 1..50 {
            let r = markov_rhs(&e, &b, 0.1 * k as f64).unwrap().rhs;
            assert!(r <= prev);
            prev = r;
        }
    }

    #[test]
    fn tail_bound_examples() {
        let e = eig_from_spectrum(&[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(tail_bound(&e, 2).unwrap(), 3.0);
        assert_eq!(tail_bound(&e, 4).unwrap(), 0.0);
        assert!(tail_bound(&e, 5).is_err());
    }

    #[test]
    fn complement_bases_are_dominated_by_tail() {
        let phi = random_orthonormal(8, 8, 12);
        let spectrum = [9.0, 5.0, 3.0, 2.0, 1.0, 0.5, 0.2, 0.1];
        let e = crate::kle::Eigensystem {
            mean: DVector::zeros(8),
            eigenvalues: DVector::from_column_slice(&spectrum),
            eigenvectors: phi,
            effective_rank: 8,
        };
        let comp = complement_basis(&e, 3).unwrap().vectors;
        let tail = tail_bound(&e, 3).unwrap();
        for k in 0..50 {
            let s = &comp * random_orthonormal(5, 2, 100 + k);
            let b = markov_rhs(&e, &basis(s), 1.0).unwrap();
            assert!(b.rhs <= tail + 1e-9);
        }
    }
}
