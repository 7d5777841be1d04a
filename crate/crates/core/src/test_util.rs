//! Helpers shared by the unit tests. Oracles here never call into the
//! routines they are used to check.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kle::Eigensystem;

pub fn random_matrix(n: usize, f: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, f, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
    let b = random_matrix(n, n, seed);
    &b * b.transpose() + DMatrix::identity(n, n) * 0.1
}

pub fn orthonormality_error(v: &DMatrix<f64>) -> f64 {
    let m = v.ncols();
    (v.tr_mul(v) - DMatrix::identity(m, m)).amax()
}

/// Eigen-system with the canonical basis as eigenvectors.
pub fn eig_from_spectrum(spectrum: &[f64]) -> Eigensystem {
    let r = spectrum.len();
    Eigensystem {
        mean: DVector::zeros(r),
        eigenvalues: DVector::from_column_slice(spectrum),
        eigenvectors: DMatrix::identity(r, r),
        effective_rank: spectrum.iter().filter(|&&l| l > 0.0).count(),
    }
}

/// Orthonormal F x M matrix by classical Gram-Schmidt on random columns.
pub fn random_orthonormal(f: usize, m: usize, seed: u64) -> DMatrix<f64> {
    let raw = random_matrix(f, m, seed);
    let mut q = DMatrix::<f64>::zeros(f, m);
    for k in 0..m {
        let mut v = raw.column(k).into_owned();
        for _ in 0..2 {
            for j in 0..k {
                let p = q.column(j).dot(&v);
                v -= q.column(j) * p;
            }
        }
        let n = v.norm();
        q.set_column(k, &(v / n));
    }
    q
}

fn det3(a: &DMatrix<f64>, lambda: f64) -> f64 {
    let m = |i: usize, j: usize| a[(i, j)] - if i == j { lambda } else { 0.0 };
    m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
        - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
}

/// Roots of det(A - lambda I) for a symmetric 3 x 3 matrix, found by a sign
/// scan followed by bisection. Returned in descending order.
pub fn charpoly_roots_3x3(a: &DMatrix<f64>) -> Vec<f64> {
    let bound = a.norm() + 1.0;
    let steps = 20_000;
    let h = 2.0 * bound / steps as f64;
    let mut roots = Vec::new();
    let mut lo = -bound;
    let mut p_lo = det3(a, lo);
    for s in 1..=steps {
        let hi = -bound + s as f64 * h;
        let p_hi = det3(a, hi);
        if p_lo == 0.0 {
            roots.push(lo);
        } else if p_lo.signum() != p_hi.signum() && p_hi != 0.0 {
            let (mut l, mut r) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (l + r);
                if det3(a, mid).signum() == det3(a, l).signum() {
                    l = mid;
                } else {
                    r = mid;
                }
            }
            roots.push(0.5 * (l + r));
        }
        lo = hi;
        p_lo = p_hi;
    }
    roots.sort_by(|x, y| y.total_cmp(x));
    roots
}
