//! Dense complex linear algebra used by the rest of the crate: singular-value
//! rank, pseudoinverse least squares, exact Smith normal form over the
//! integers, and a damped Gauss-Newton corrector.

mod newton;
mod smith;

pub use newton::{gauss_newton, NewtonOutcome};
pub use smith::{smith_normal_form, IntMatrix};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = Complex64;

/// Dense complex matrix. Group elements, chart values, tangent vectors and
/// Jacobians are all stored as this type.
pub type CMatrix = DMatrix<C64>;

/// Dense complex column vector (flattened parameter points).
pub type CVector = DVector<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Build a complex matrix from real row slices.
pub fn real_matrix(rows: &[&[f64]]) -> CMatrix {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(nrows, ncols, |i, j| re(rows[i][j]))
}

/// Numerical thresholds shared by every numerical routine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Singular values at or below `rank_tol * sigma_max` count as zero.
    pub rank_tol: f64,
    /// Frobenius-norm residual at which a factorisation is accepted.
    pub residual_tol: f64,
    /// Convergence threshold for Newton-type iterations.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-9,
            residual_tol: 1e-8,
            newton_tol: 1e-12,
            max_newton_iters: 50,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rank_tol > 0.0
            && self.rank_tol < 1.0
            && self.residual_tol > 0.0
            && self.newton_tol > 0.0
            && self.max_newton_iters > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidTolerances(*self))
        }
    }
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values strictly above `rank_tol` times the largest one.
pub fn numerical_rank(m: &CMatrix, tol: &Tolerances) -> usize {
    rank_from_singular_values(&singular_values(m), tol.rank_tol)
}

pub(crate) fn rank_from_singular_values(sv: &[f64], rank_tol: f64) -> usize {
    let max = sv.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rank_tol * max).count()
}

/// Minimum-norm least-squares solution of `a x = b`.
///
/// Singular values below `n_max * eps * sigma_max` are discarded, which is the
/// usual pseudoinverse cutoff.
pub fn least_squares_solve(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let rcond = f64::EPSILON * a.nrows().max(a.ncols()).max(1) as f64;
    least_squares_solve_rcond(a, b, rcond)
}

/// Pseudoinverse solve with an explicit relative singular-value cutoff.
pub fn least_squares_solve_rcond(a: &CMatrix, b: &CMatrix, rcond: f64) -> CMatrix {
    assert_eq!(a.nrows(), b.nrows(), "least squares: row count mismatch");
    if a.is_empty() {
        return CMatrix::zeros(a.ncols(), b.ncols());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return CMatrix::zeros(a.ncols(), b.ncols());
    }
    // `solve` treats singular values <= eps as zero.
    svd.solve(b, rcond * smax)
        .expect("SVD computed with both U and V")
}

/// Flatten a matrix row-major into a column vector.
pub fn vec_row_major(m: &CMatrix) -> CVector {
    let (r, cc) = m.shape();
    CVector::from_fn(r * cc, |k, _| m[(k / cc, k % cc)])
}

pub fn unvec_row_major(v: &CVector, nrows: usize, ncols: usize) -> CMatrix {
    CMatrix::from_fn(nrows, ncols, |i, j| v[i * ncols + j])
}

pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// Inverse of a square matrix; `None` when numerically singular.
pub fn try_inverse(m: &CMatrix) -> Option<CMatrix> {
    m.clone().try_inverse().filter(is_finite)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
