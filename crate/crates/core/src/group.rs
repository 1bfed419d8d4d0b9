//! The ambient matrix groups and their membership tests.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{
    gauss_newton, is_finite, re, unvec_row_major, vec_row_major, CMatrix, CVector, Tolerances,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupName {
    #[serde(rename = "SL2")]
    Sl2,
    #[serde(rename = "GLn")]
    Gln,
    #[serde(rename = "Sp2n")]
    Sp2n,
    #[serde(rename = "Torus2")]
    Torus2,
}

/// A concrete matrix group `G`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupDescriptor {
    pub name: GroupName,
    /// Side length of the ambient matrices.
    pub ambient_size: usize,
    /// Complex dimension of `G`.
    pub dim: usize,
}

impl fmt::Display for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name {
            GroupName::Sl2 => write!(f, "SL2"),
            GroupName::Gln => write!(f, "GL{}", self.ambient_size),
            GroupName::Sp2n => write!(f, "Sp{}", self.ambient_size),
            GroupName::Torus2 => write!(f, "(C*)^2"),
        }
    }
}

impl GroupDescriptor {
    pub fn sl2() -> Self {
        Self { name: GroupName::Sl2, ambient_size: 2, dim: 3 }
    }

    pub fn gln(n: usize) -> Self {
        Self { name: GroupName::Gln, ambient_size: n, dim: n * n }
    }

    /// `Sp_{2n}`, of dimension `n(2n+1)`.
    pub fn sp2n(n: usize) -> Self {
        Self { name: GroupName::Sp2n, ambient_size: 2 * n, dim: n * (2 * n + 1) }
    }

    /// `(C*)^2`, realised as invertible diagonal 2x2 matrices.
    pub fn torus2() -> Self {
        Self { name: GroupName::Torus2, ambient_size: 2, dim: 2 }
    }

    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.ambient_size, self.ambient_size)
    }

    /// Distance-like measure of how far `m` is from satisfying the defining
    /// equations of the group. Zero on the group.
    pub fn membership_residual(&self, m: &CMatrix, tol: &Tolerances) -> f64 {
        let n = self.ambient_size;
        if m.shape() != (n, n) || !is_finite(m) {
            return f64::INFINITY;
        }
        match self.name {
            GroupName::Sl2 => (m.determinant() - re(1.0)).norm(),
            GroupName::Gln => {
                if m.determinant().norm() > tol.rank_tol {
                    0.0
                } else {
                    1.0
                }
            }
            GroupName::Sp2n => {
                let j = symplectic_form(n / 2);
                (m.transpose() * &j * m - j).norm()
            }
            GroupName::Torus2 => {
                let off = m[(0, 1)].norm() + m[(1, 0)].norm();
                let degenerate = (0..2).any(|i| m[(i, i)].norm() <= tol.rank_tol);
                off + if degenerate { 1.0 } else { 0.0 }
            }
        }
    }

    pub fn contains(&self, m: &CMatrix, tol: &Tolerances) -> bool {
        self.membership_residual(m, tol) < tol.residual_tol
    }

    /// Move a nearby matrix onto the group.
    pub fn project(&self, m: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
        let n = self.ambient_size;
        if m.shape() != (n, n) {
            return Err(Error::Shape(format!("expected a {n}x{n} matrix")));
        }
        if !is_finite(m) {
            return Err(Error::NonFinite);
        }
        let out = match self.name {
            GroupName::Sl2 => {
                let det = m.determinant();
                if det.norm() <= tol.rank_tol {
                    return Err(Error::NotInvertible);
                }
                m * det.sqrt().inv()
            }
            GroupName::Gln => m.clone(),
            GroupName::Torus2 => {
                let mut d = CMatrix::zeros(2, 2);
                d[(0, 0)] = m[(0, 0)];
                d[(1, 1)] = m[(1, 1)];
                d
            }
            GroupName::Sp2n => project_symplectic(m, tol)?,
        };
        if self.contains(&out, tol) {
            Ok(out)
        } else {
            Err(Error::NotInGroup { residual: self.membership_residual(&out, tol) })
        }
    }
}

/// `J = [[0, I], [-I, 0]]`, the matrix of `<(b,c),(d,e)> = b e^T - c d^T`.
pub fn symplectic_form(n: usize) -> CMatrix {
    let mut j = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = re(1.0);
        j[(n + i, i)] = re(-1.0);
    }
    j
}

fn project_symplectic(m: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let size = m.nrows();
    let j = symplectic_form(size / 2);
    let residual = |v: &CVector| {
        let x = unvec_row_major(v, size, size);
        Some(vec_row_major(&(x.transpose() * &j * &x - &j)))
    };
    let jacobian = |v: &CVector| {
        let x = unvec_row_major(v, size, size);
        let jx = &j * &x;
        let xtj = x.transpose() * &j;
        let mut jac = CMatrix::zeros(size * size, size * size);
        for k in 0..size {
            for l in 0..size {
                // d/dx_kl (X^T J X) = E_lk J X + X^T J E_kl
                let mut d = CMatrix::zeros(size, size);
                for c in 0..size {
                    d[(l, c)] += jx[(k, c)];
                    d[(c, l)] += xtj[(c, k)];
                }
                jac.set_column(k * size + l, &vec_row_major(&d));
            }
        }
        Some(jac)
    };
    let out = gauss_newton(vec_row_major(m), residual, jacobian, tol.newton_tol, tol);
    Ok(unvec_row_major(&out.x, size, size))
}
