//! Charted subvarieties ("letters") of a matrix group.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{
    is_finite, least_squares_solve, re, try_inverse, vec_row_major, CMatrix, C64,
};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LetterId(pub String);

impl LetterId {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LetterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LetterId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// Domain of one chart coordinate: `C` or `C*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordKind {
    Affine,
    Torus,
}

impl CoordKind {
    /// Coordinate value at the unit element.
    pub fn unit(self) -> C64 {
        match self {
            CoordKind::Affine => re(0.0),
            CoordKind::Torus => re(1.0),
        }
    }
}

/// How parameters map to matrices.
#[derive(Clone, Debug)]
pub enum Chart {
    /// `p -> base + sum_k p_k basis_k`.
    Linear { base: CMatrix, basis: Vec<CMatrix> },
    /// `p -> diag(prod_k p_k^{e_ik})`; `exponents[i][k] = e_ik`.
    Monomial { exponents: Vec<Vec<i32>> },
}

/// A parametrised irreducible subvariety `X_a` of the group containing `1`.
#[derive(Clone, Debug)]
pub struct Letter {
    pub id: LetterId,
    pub coords: Vec<CoordKind>,
    pub chart: Chart,
    /// The letter `b` with `X_a^{-1} = X_b`.
    pub inverse_letter: LetterId,
    /// Closed under multiplication, so runs `aa` may be collapsed.
    pub subgroup: bool,
    pub description: String,
}

impl Letter {
    pub fn param_dim(&self) -> usize {
        self.coords.len()
    }

    pub fn unit_point(&self) -> Vec<C64> {
        self.coords.iter().map(|k| k.unit()).collect()
    }

    pub fn is_monomial(&self) -> bool {
        matches!(self.chart, Chart::Monomial { .. })
    }

    fn size(&self) -> usize {
        match &self.chart {
            Chart::Linear { base, .. } => base.nrows(),
            Chart::Monomial { exponents } => exponents.len(),
        }
    }

    pub fn check_domain(&self, p: &[C64]) -> Result<()> {
        if p.len() != self.param_dim() {
            return Err(Error::ParamMismatch(format!(
                "letter {} takes {} parameters, got {}",
                self.id,
                self.param_dim(),
                p.len()
            )));
        }
        for (k, (z, kind)) in p.iter().zip(&self.coords).enumerate() {
            let bad = !z.re.is_finite()
                || !z.im.is_finite()
                || (*kind == CoordKind::Torus && z.norm() == 0.0);
            if bad {
                return Err(Error::DomainViolation { letter: self.id.to_string(), coordinate: k });
            }
        }
        Ok(())
    }

    pub fn chart_at(&self, p: &[C64]) -> Result<CMatrix> {
        self.check_domain(p)?;
        Ok(match &self.chart {
            Chart::Linear { base, basis } => {
                let mut m = base.clone();
                for (b, z) in basis.iter().zip(p) {
                    m += b * *z;
                }
                m
            }
            Chart::Monomial { exponents } => {
                let n = exponents.len();
                let mut m = CMatrix::zeros(n, n);
                for (i, row) in exponents.iter().enumerate() {
                    m[(i, i)] = monomial(p, row);
                }
                m
            }
        })
    }

    /// Partial derivatives of the chart at `p`, one matrix per coordinate.
    pub fn tangent_basis(&self, p: &[C64]) -> Result<Vec<CMatrix>> {
        self.check_domain(p)?;
        Ok(match &self.chart {
            Chart::Linear { basis, .. } => basis.clone(),
            Chart::Monomial { exponents } => {
                let n = exponents.len();
                (0..p.len())
                    .map(|k| {
                        let mut d = CMatrix::zeros(n, n);
                        for (i, row) in exponents.iter().enumerate() {
                            let e = row[k];
                            if e != 0 {
                                d[(i, i)] = monomial(p, row) * re(e as f64) / p[k];
                            }
                        }
                        d
                    })
                    .collect()
            }
        })
    }

    /// Recover chart coordinates from a matrix in the image of the chart.
    ///
    /// Returns `None` when `g` is not (numerically) in the image, or lies off
    /// the dense subset where coordinates can be read off.
    pub fn inverse_chart(&self, g: &CMatrix) -> Option<Vec<C64>> {
        let n = self.size();
        if g.shape() != (n, n) || !is_finite(g) {
            return None;
        }
        let p: Vec<C64> = match &self.chart {
            Chart::Linear { base, basis } => {
                if basis.is_empty() {
                    Vec::new()
                } else {
                    let mut a = CMatrix::zeros(n * n, basis.len());
                    for (k, b) in basis.iter().enumerate() {
                        a.set_column(k, &vec_row_major(b));
                    }
                    let rhs = vec_row_major(&(g - base));
                    let rhs = CMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
                    least_squares_solve(&a, &rhs).iter().copied().collect()
                }
            }
            Chart::Monomial { exponents } => {
                let d = self.param_dim();
                let mut p = Vec::with_capacity(d);
                for k in 0..d {
                    // A diagonal entry carrying exactly the k-th coordinate.
                    let row = exponents.iter().position(|row| {
                        row.iter().enumerate().all(|(j, &e)| e == i32::from(j == k))
                    })?;
                    p.push(g[(row, row)]);
                }
                p
            }
        };
        let back = self.chart_at(&p).ok()?;
        let scale = 1.0 + g.norm();
        ((back - g).norm() <= 1e-9 * scale).then_some(p)
    }

    /// Coordinates of `chart(p) chart(q)` when the letter is a subgroup.
    pub fn compose(&self, p: &[C64], q: &[C64]) -> Result<Vec<C64>> {
        if !self.subgroup {
            return Err(Error::NotSubgroup(self.id.to_string()));
        }
        match &self.chart {
            Chart::Monomial { .. } => {
                self.check_domain(p)?;
                self.check_domain(q)?;
                Ok(p.iter().zip(q).map(|(a, b)| a * b).collect())
            }
            Chart::Linear { .. } => {
                let prod = self.chart_at(p)? * self.chart_at(q)?;
                self.inverse_chart(&prod)
                    .ok_or_else(|| Error::NotSubgroup(self.id.to_string()))
            }
        }
    }

    /// Coordinates of `chart(p)^{-1}` for self-inverse letters.
    pub fn invert(&self, p: &[C64]) -> Result<Vec<C64>> {
        if self.inverse_letter != self.id {
            return Err(Error::Unsupported(format!("inverting letter {}", self.id)));
        }
        match &self.chart {
            Chart::Monomial { .. } => {
                self.check_domain(p)?;
                Ok(p.iter().map(|z| z.inv()).collect())
            }
            Chart::Linear { .. } => {
                let inv = try_inverse(&self.chart_at(p)?).ok_or(Error::NotInvertible)?;
                self.inverse_chart(&inv)
                    .ok_or_else(|| Error::Unsupported(format!("inverting letter {}", self.id)))
            }
        }
    }
}

fn monomial(p: &[C64], exponents: &[i32]) -> C64 {
    p.iter()
        .zip(exponents)
        .fold(re(1.0), |acc, (z, &e)| if e == 0 { acc } else { acc * z.powi(e) })
}
