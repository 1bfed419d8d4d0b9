use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer matrix with arbitrary-precision entries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 {
            return Err(Error::Shape("integer matrix must be non-empty".into()));
        }
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Shape("integer matrix rows have unequal lengths".into()));
        }
        let entries = rows.iter().flat_map(|r| r.iter().cloned().map(Into::into)).collect();
        Ok(Self { nrows, ncols, entries })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.ncols + j]
    }

    pub fn rows(&self) -> Vec<Vec<BigInt>> {
        self.entries.chunks(self.ncols).map(<[BigInt]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.ncols {
            for i in 0..self.nrows {
                entries.push(self.get(i, j).clone());
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, entries }
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::Shape("integer matrix product: inner dimensions differ".into()));
        }
        let mut entries = vec![BigInt::zero(); self.nrows * other.ncols];
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.ncols {
                    entries[i * other.ncols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(IntMatrix { nrows: self.nrows, ncols: other.ncols, entries })
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, row) in self.entries.chunks(self.ncols).enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Invariant factors `d_1 | d_2 | ... | d_r` of an integer matrix, where `r`
/// is its rank over the rationals. Every factor is positive.
///
/// Exact elimination over `BigInt`; the pivot is always the entry of smallest
/// absolute value in the remaining block.
pub fn smith_normal_form(m: &IntMatrix) -> Vec<BigInt> {
    let mut a = m.rows();
    let (nr, nc) = (m.nrows, m.ncols);
    let mut factors = Vec::new();

    for t in 0..nr.min(nc) {
        let Some((pi, pj)) = min_abs_position(&a, t) else {
            break;
        };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }

        loop {
            // Clear column t below the pivot.
            let mut dirty = false;
            for i in (t + 1)..nr {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = a[i][t].div_floor(&a[t][t]);
                for j in t..nc {
                    let v = &q * &a[t][j];
                    a[i][j] -= v;
                }
                if !a[i][t].is_zero() {
                    dirty = true;
                }
            }
            // Clear row t right of the pivot.
            for j in (t + 1)..nc {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = a[t][j].div_floor(&a[t][t]);
                for i in t..nr {
                    let v = &q * &a[i][t];
                    a[i][j] -= v;
                }
                if !a[t][j].is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                // A remainder smaller than the pivot survived; promote it.
                move_min_to_pivot(&mut a, t);
                continue;
            }
            // Row and column are clear; enforce divisibility of the block.
            let bad = ((t + 1)..nr)
                .find(|&i| ((t + 1)..nc).any(|j| !a[i][j].is_multiple_of(&a[t][t])));
            match bad {
                Some(i) => {
                    for j in t..nc {
                        let v = a[i][j].clone();
                        a[t][j] += v;
                    }
                }
                None => break,
            }
        }
        factors.push(a[t][t].abs());
    }
    factors
}

fn min_abs_position(a: &[Vec<BigInt>], t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in a.iter().enumerate().skip(t) {
        for (j, x) in row.iter().enumerate().skip(t) {
            if x.is_zero() {
                continue;
            }
            match best {
                Some((bi, bj)) if a[bi][bj].abs() <= x.abs() => {}
                _ => best = Some((i, j)),
            }
        }
    }
    best
}

fn move_min_to_pivot(a: &mut [Vec<BigInt>], t: usize) {
    let (pi, pj) = min_abs_position(a, t).expect("pivot block is nonzero");
    a.swap(t, pi);
    for row in a.iter_mut() {
        row.swap(t, pj);
    }
}
