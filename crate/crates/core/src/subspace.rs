//! Residual subspaces of the class-A complement and the feature transform
//! that projects samples onto them.
//!
//! Four constructions are provided:
//!
//! * **Direct**: the whole complement of the leading `M_A` class-A modes.
//! * **MLS**: a multilevel, Haar-like basis of the complement. The candidate
//!   family is the dyadic Haar system on the feature index range, ordered
//!   coarse to fine, orthogonalized against the class-A modes.
//! * **ACA-S / ACA-L**: eigenvectors of the class-B covariance compressed to
//!   the complement, taking the smallest (S) or largest (L) eigenvalues.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{FinderError, Result};
use crate::kle::{self, Eigensystem, DEFAULT_RANK_TOL};

/// Residual norms below this are treated as linear dependence in the MLS
/// orthogonalization.
pub const MLS_DEPENDENCE_TOL: f64 = 1e-8;

/// Which construction produced a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Complement,
    Direct,
    Mls,
    AcaS,
    AcaL,
    /// Identity on the ambient space; used for the no-transform baseline.
    Identity,
}

/// Pipeline variant selecting how the residual subspace is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Direct,
    Mls,
    AcaS,
    AcaL,
    /// Standardized features passed straight to the classifier.
    Raw,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Direct,
        Variant::Mls,
        Variant::AcaS,
        Variant::AcaL,
        Variant::Raw,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Direct => "direct",
            Variant::Mls => "mls",
            Variant::AcaS => "aca-s",
            Variant::AcaL => "aca-l",
            Variant::Raw => "raw",
        }
    }

    /// Whether the variant needs a class-B covariance estimate.
    pub fn uses_class_b(self) -> bool {
        matches!(self, Variant::AcaS | Variant::AcaL)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = FinderError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                FinderError::InvalidParameter(format!(
                    "unknown variant '{s}' (expected direct, mls, aca-s, aca-l or raw)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcaMode {
    /// Minimize class-B spread in the residual space.
    Smallest,
    /// Maximize class-B spread in the residual space.
    Largest,
}

/// F x M matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    pub vectors: DMatrix<f64>,
    pub variant: BasisKind,
    /// `(M_A, M_res)` the basis was built with.
    pub parent_dims: (usize, usize),
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors.nrows()
    }

    /// `sum_m <s_m, C s_m>`, the variance of `C` captured by the basis.
    pub fn captured_energy(&self, cov: &DMatrix<f64>) -> Result<f64> {
        if cov.shape() != (self.ambient_dim(), self.ambient_dim()) {
            return Err(FinderError::DimensionMismatch {
                expected: self.ambient_dim(),
                found: cov.nrows(),
            });
        }
        Ok((self.vectors.transpose() * cov * &self.vectors).trace())
    }
}

/// Centering on the class-A mean followed by the coefficient map
/// `v -> S^T (v - mu_A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTransform {
    pub class_a_mean: DVector<f64>,
    pub basis: SubspaceBasis,
    pub output_dim: usize,
    /// Sum of the selected compressed class-B eigenvalues (ACA only).
    pub objective: Option<f64>,
}

impl FeatureTransform {
    pub fn new(
        class_a_mean: DVector<f64>,
        basis: SubspaceBasis,
        objective: Option<f64>,
    ) -> Result<Self> {
        if class_a_mean.len() != basis.ambient_dim() {
            return Err(FinderError::DimensionMismatch {
                expected: basis.ambient_dim(),
                found: class_a_mean.len(),
            });
        }
        Ok(Self {
            output_dim: basis.dim(),
            class_a_mean,
            basis,
            objective,
        })
    }

    /// Identity map, centered on `class_a_mean`.
    pub fn identity(class_a_mean: DVector<f64>) -> Self {
        let f = class_a_mean.len();
        let basis = SubspaceBasis {
            vectors: DMatrix::identity(f, f),
            variant: BasisKind::Identity,
            parent_dims: (0, f),
        };
        Self {
            output_dim: f,
            class_a_mean,
            basis,
            objective: None,
        }
    }

    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.class_a_mean.len() {
            return Err(FinderError::DimensionMismatch {
                expected: self.class_a_mean.len(),
                found: v.len(),
            });
        }
        Ok(self.basis.vectors.tr_mul(&(v - &self.class_a_mean)))
    }

    /// Transforms every row of an N x F matrix into an N x M matrix.
    pub fn apply_rows(&self, rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let centered = kle::center_rows(rows, &self.class_a_mean)?;
        Ok(centered * &self.basis.vectors)
    }

    /// The linear part `S^T x` without centering.
    pub fn linear(&self, x: &DVector<f64>) -> DVector<f64> {
        self.basis.vectors.tr_mul(x)
    }

    /// `S^T C S`, the covariance of transformed samples given the ambient
    /// covariance `C`.
    pub fn project_covariance(&self, cov: &DMatrix<f64>) -> DMatrix<f64> {
        self.basis.vectors.transpose() * cov * &self.basis.vectors
    }
}

fn check_complement_dims(eig_a: &Eigensystem, m_a: usize) -> Result<()> {
    let f = eig_a.dim();
    if m_a >= f {
        return Err(FinderError::InvalidParameter(format!(
            "M_A = {m_a} leaves no complement in dimension F = {f}"
        )));
    }
    if m_a > eig_a.effective_rank {
        return Err(FinderError::RankDeficient {
            requested: m_a,
            available: eig_a.effective_rank,
        });
    }
    Ok(())
}

/// Orthonormal basis of the complement of the leading `m_a` class-A modes.
///
/// Built from the Householder QR of those modes: the trailing `F - m_a`
/// columns of the full orthogonal factor span the complement.
pub fn complement_basis(eig_a: &Eigensystem, m_a: usize) -> Result<SubspaceBasis> {
    check_complement_dims(eig_a, m_a)?;
    let f = eig_a.dim();
    let mut a = eig_a.leading(m_a);
    let mut reflectors: Vec<DVector<f64>> = Vec::with_capacity(m_a);
    for k in 0..m_a {
        let x = a.view((k, k), (f - k, 1)).column(0).into_owned();
        let alpha = x.norm();
        let mut v = x;
        v[0] += if v[0] >= 0.0 { alpha } else { -alpha };
        let vn = v.norm();
        if vn > 0.0 {
            v /= vn;
        }
        let mut block = a.view_mut((k, k), (f - k, m_a - k));
        let proj = v.tr_mul(&block);
        block -= &v * proj * 2.0;
        reflectors.push(v);
    }
    let mut q = DMatrix::<f64>::zeros(f, f - m_a);
    for j in 0..(f - m_a) {
        q[(m_a + j, j)] = 1.0;
    }
    for (k, v) in reflectors.iter().enumerate().rev() {
        let mut block = q.rows_mut(k, f - k);
        let proj = v.tr_mul(&block);
        block -= v * proj * 2.0;
    }
    Ok(SubspaceBasis {
        vectors: q,
        variant: BasisKind::Complement,
        parent_dims: (m_a, f - m_a),
    })
}

/// Residual space equal to the whole complement; emits `F - m_a`
/// coefficients.
pub fn direct_residual(eig_a: &Eigensystem, m_a: usize) -> Result<FeatureTransform> {
    let mut basis = complement_basis(eig_a, m_a)?;
    basis.variant = BasisKind::Direct;
    FeatureTransform::new(eig_a.mean.clone(), basis, None)
}

/// Dyadic Haar-like vectors on `0..f`, coarse to fine, ties broken by left
/// endpoint. Level 0 is the normalized constant; each later vector splits
/// one interval at `lo + ceil(len / 2)` into a positive and a negative half.
pub fn haar_family(f: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(f);
    if f == 0 {
        return out;
    }
    out.push(DVector::from_element(f, 1.0 / (f as f64).sqrt()));
    let mut level = vec![(0usize, f)];
    while !level.is_empty() {
        let mut next = Vec::with_capacity(level.len() * 2);
        for &(lo, hi) in &level {
            let len = hi - lo;
            if len < 2 {
                continue;
            }
            let mid = lo + len.div_ceil(2);
            let (nl, nr) = ((mid - lo) as f64, (hi - mid) as f64);
            let mut v = DVector::zeros(f);
            for i in lo..mid {
                v[i] = 1.0 / nl;
            }
            for i in mid..hi {
                v[i] = -1.0 / nr;
            }
            v /= v.norm();
            out.push(v);
            next.push((lo, mid));
            next.push((mid, hi));
        }
        level = next;
    }
    out
}

/// First `m_res` vectors of a multilevel basis of the class-A complement.
///
/// Each Haar candidate is orthogonalized by modified Gram-Schmidt (two passes)
/// against the leading class-A modes and every accepted vector; candidates
/// whose residual norm falls below [`MLS_DEPENDENCE_TOL`] are dropped.
pub fn mls_basis(f: usize, eig_a: &Eigensystem, m_a: usize, m_res: usize) -> Result<SubspaceBasis> {
    if f != eig_a.dim() {
        return Err(FinderError::DimensionMismatch {
            expected: eig_a.dim(),
            found: f,
        });
    }
    check_complement_dims(eig_a, m_a)?;
    check_m_res(f, m_a, m_res)?;
    let phi = eig_a.leading(m_a);
    let mut accepted: Vec<DVector<f64>> = Vec::with_capacity(m_res);
    for mut v in haar_family(f) {
        for _ in 0..2 {
            for q in phi.column_iter() {
                let p = q.dot(&v);
                v.axpy(-p, &q, 1.0);
            }
            for q in &accepted {
                let p = q.dot(&v);
                v.axpy(-p, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm < MLS_DEPENDENCE_TOL {
            continue;
        }
        accepted.push(v / norm);
        if accepted.len() == m_res {
            break;
        }
    }
    if accepted.len() < m_res {
        return Err(FinderError::RankDeficient {
            requested: m_res,
            available: accepted.len(),
        });
    }
    Ok(SubspaceBasis {
        vectors: DMatrix::from_columns(&accepted),
        variant: BasisKind::Mls,
        parent_dims: (m_a, m_res),
    })
}

/// MLS residual transform centered on the class-A mean.
pub fn mls_residual(eig_a: &Eigensystem, m_a: usize, m_res: usize) -> Result<FeatureTransform> {
    let basis = mls_basis(eig_a.dim(), eig_a, m_a, m_res)?;
    FeatureTransform::new(eig_a.mean.clone(), basis, None)
}

fn check_m_res(f: usize, m_a: usize, m_res: usize) -> Result<()> {
    if m_res == 0 || m_res > f - m_a {
        return Err(FinderError::InvalidParameter(format!(
            "M_res = {m_res} must lie in 1..={} (F - M_A with F = {f}, M_A = {m_a})",
            f - m_a
        )));
    }
    Ok(())
}

/// Class-B adapted residual space.
///
/// The class-B covariance is compressed to the class-A complement,
/// `G = V^T C_B V`, and the residual basis is `s_m = V t_m` for the
/// eigenvectors `t_m` of the `m_res` smallest (ACA-S) or largest (ACA-L)
/// eigenvalues of `G`. Ties keep the eigensolver's stored order. The sum of
/// the selected eigenvalues is attached as the transform's objective.
pub fn aca_subspace(
    eig_a: &Eigensystem,
    cov_b: &DMatrix<f64>,
    m_a: usize,
    m_res: usize,
    mode: AcaMode,
) -> Result<FeatureTransform> {
    let f = eig_a.dim();
    if cov_b.shape() != (f, f) {
        return Err(FinderError::DimensionMismatch {
            expected: f,
            found: cov_b.nrows().max(cov_b.ncols()),
        });
    }
    check_complement_dims(eig_a, m_a)?;
    check_m_res(f, m_a, m_res)?;
    let complement = complement_basis(eig_a, m_a)?;
    let v = &complement.vectors;
    let mut g = v.transpose() * cov_b * v;
    kle::symmetrize(&mut g);
    let eig_g = kle::eigendecompose(&g, DEFAULT_RANK_TOL)?;

    let mut order: Vec<usize> = (0..eig_g.len()).collect();
    match mode {
        AcaMode::Smallest => {
            order.sort_by(|&i, &j| eig_g.eigenvalues[i].total_cmp(&eig_g.eigenvalues[j]))
        }
        AcaMode::Largest => {
            order.sort_by(|&i, &j| eig_g.eigenvalues[j].total_cmp(&eig_g.eigenvalues[i]))
        }
    }
    let chosen = &order[..m_res];
    let t = eig_g.eigenvectors.select_columns(chosen);
    let objective = chosen.iter().map(|&i| eig_g.eigenvalues[i]).sum();
    let basis = SubspaceBasis {
        vectors: v * t,
        variant: match mode {
            AcaMode::Smallest => BasisKind::AcaS,
            AcaMode::Largest => BasisKind::AcaL,
        },
        parent_dims: (m_a, m_res),
    };
    FeatureTransform::new(eig_a.mean.clone(), basis, Some(objective))
}
