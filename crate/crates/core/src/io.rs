//! JSON formats. Complex numbers are `[re, im]` pairs; a matrix file is
//! `{"rows": [[[re, im], ...], ...]}` and a curve file is
//! `{"samples": [{"t": 0.0, "matrix": ...}, ...]}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{CMatrix, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: Vec<Vec<[f64; 2]>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMatrix) -> Self {
        Self {
            rows: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        rows_to_matrix(&self.rows)
    }
}

fn rows_to_matrix(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(Error::Shape("empty matrix".into()));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Shape("rows have different lengths".into()));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

/// A matrix given either as `{"rows": ...}` or as bare rows.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum MatrixValue {
    File(MatrixFile),
    Rows(Vec<Vec<[f64; 2]>>),
}

#[derive(Clone, Debug, Deserialize)]
struct RawSample {
    t: f64,
    matrix: MatrixValue,
}

#[derive(Clone, Debug, Deserialize)]
struct RawCurve {
    samples: Vec<RawSample>,
}

pub fn parse_matrix(json: &str) -> Result<CMatrix> {
    let v: MatrixValue = serde_json::from_str(json).map_err(|e| Error::Input(e.to_string()))?;
    match v {
        MatrixValue::File(f) => f.to_matrix(),
        MatrixValue::Rows(r) => rows_to_matrix(&r),
    }
}

pub fn matrix_to_json(m: &CMatrix) -> String {
    serde_json::to_string(&MatrixFile::from_matrix(m)).expect("matrix serialises")
}

/// Curve samples `(t, g(t))`, sorted by `t`.
pub fn parse_curve_samples(json: &str) -> Result<Vec<(f64, CMatrix)>> {
    let raw: RawCurve = serde_json::from_str(json).map_err(|e| Error::Input(e.to_string()))?;
    let mut out = Vec::with_capacity(raw.samples.len());
    for s in raw.samples {
        if !s.t.is_finite() {
            return Err(Error::NonFinite);
        }
        let m = match s.matrix {
            MatrixValue::File(f) => f.to_matrix()?,
            MatrixValue::Rows(r) => rows_to_matrix(&r)?,
        };
        out.push((s.t, m));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Parses an integer matrix written as `[[1,2],[3,4]]`.
pub fn parse_int_rows(s: &str) -> Result<Vec<Vec<i64>>> {
    serde_json::from_str(s).map_err(|e| Error::Input(e.to_string()))
}

/// Serde adapter for `Vec<C64>` as `[[re, im], ...]`.
pub mod complex_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::numeric::C64;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let v: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

/// Serde adapter for parameter blocks `Vec<Vec<C64>>`.
pub mod complex_blocks {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::numeric::C64;

    pub fn serialize<S: Serializer>(v: &[Vec<C64>], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|b| b.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<C64>>, D::Error> {
        let v: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        Ok(v.into_iter()
            .map(|b| b.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect())
    }
}

/// Serde adapter for a [`CMatrix`] as [`MatrixFile`].
pub mod matrix {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::MatrixFile;
    use crate::numeric::CMatrix;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        MatrixFile::from_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        MatrixFile::deserialize(d)?.to_matrix().map_err(serde::de::Error::custom)
    }
}
