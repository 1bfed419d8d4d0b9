//! Words over a catalog's letters and the multiplication map
//! `mu_w(x_1, ..., x_l) = x_1 ... x_l`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::catalog::CatalogEntry;
use crate::error::{Error, Result};
use crate::letter::LetterId;
use crate::numeric::{
    frobenius_distance, numerical_rank, vec_row_major, CMatrix, CVector, Tolerances, C64,
};
use crate::random::{coordinate, rng, SeededRng};

/// A nonempty sequence of letter ids.
///
/// Displays without separators when every id is a single digit (`1212`) and
/// dotted otherwise (`U.L.U`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<LetterId>);

impl Word {
    pub fn new(letters: Vec<LetterId>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::EmptyWord);
        }
        Ok(Self(letters))
    }

    pub fn letters(&self) -> &[LetterId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// `self` repeated `k >= 1` times.
    pub fn power(&self, k: usize) -> Word {
        assert!(k >= 1, "power of a word needs k >= 1");
        Word(self.power_iter(k).cloned().collect())
    }

    pub fn slice(&self, start: usize, end: usize) -> Option<Word> {
        (start < end && end <= self.len()).then(|| Word(self.0[start..end].to_vec()))
    }

    /// Letter-by-letter view of `u^k` without materialising it.
    pub(crate) fn power_iter(&self, k: usize) -> impl Iterator<Item = &LetterId> + Clone {
        self.0.iter().cycle().take(self.0.len() * k)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = self.0.iter().all(|l| {
            let mut c = l.as_str().chars();
            matches!((c.next(), c.next()), (Some(d), None) if d.is_ascii_digit())
        });
        let dotted = !digits;
        let sep = if dotted { "." } else { "" };
        let parts: Vec<&str> = self.0.iter().map(LetterId::as_str).collect();
        f.write_str(&parts.join(sep))
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    /// Reads the dotted form only (`"U.L.U"`) or single-character tokens;
    /// aliases are resolved by [`CatalogEntry::word`].
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let ids: Vec<LetterId> = if s.contains('.') {
            s.split('.').map(LetterId::from).collect()
        } else {
            s.chars().map(|c| LetterId(c.to_string())).collect()
        };
        Word::new(ids).map_err(serde::de::Error::custom)
    }
}

/// True iff `u` occurs in `w` at consecutive positions.
pub fn contains_consecutive(w: &Word, u: &Word) -> bool {
    contains_consecutive_iter(w.letters(), u.letters().iter())
}

pub(crate) fn contains_consecutive_iter<'a, I>(w: &[LetterId], u: I) -> bool
where
    I: Iterator<Item = &'a LetterId> + Clone,
{
    let m = u.clone().count();
    if m > w.len() {
        return false;
    }
    (0..=w.len() - m).any(|s| u.clone().zip(&w[s..]).all(|(a, b)| a == b))
}

/// True iff `u` occurs in `w` as a (not necessarily consecutive) subsequence.
pub fn contains_subsequence(w: &Word, u: &Word) -> bool {
    let mut it = w.letters().iter();
    u.letters().iter().all(|a| it.any(|b| b == a))
}

/// One parameter block per letter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    #[serde(with = "crate::io::complex_blocks")]
    pub blocks: Vec<Vec<C64>>,
}

impl ParamPoint {
    pub fn new(blocks: Vec<Vec<C64>>) -> Self {
        Self { blocks }
    }

    /// The point whose every factor is the unit element.
    pub fn unit(entry: &CatalogEntry, w: &Word) -> Result<Self> {
        let blocks = w
            .letters()
            .iter()
            .map(|id| entry.letter(id).map(|l| l.unit_point()))
            .collect::<Result<_>>()?;
        Ok(Self { blocks })
    }

    pub fn random(entry: &CatalogEntry, w: &Word, rng: &mut SeededRng) -> Result<Self> {
        let mut blocks = Vec::with_capacity(w.len());
        for id in w.letters() {
            let l = entry.letter(id)?;
            blocks.push(l.coords.iter().map(|&k| coordinate(rng, k)).collect());
        }
        Ok(Self { blocks })
    }

    pub fn flatten(&self) -> CVector {
        CVector::from_iterator(
            self.blocks.iter().map(Vec::len).sum(),
            self.blocks.iter().flatten().copied(),
        )
    }

    pub fn from_flat(entry: &CatalogEntry, w: &Word, v: &CVector) -> Result<Self> {
        let total = entry.param_dim(w)?;
        if v.len() != total {
            return Err(Error::ParamMismatch(format!("expected {total} coordinates, got {}", v.len())));
        }
        let mut blocks = Vec::with_capacity(w.len());
        let mut k = 0;
        for id in w.letters() {
            let d = entry.letter(id)?.param_dim();
            blocks.push(v.as_slice()[k..k + d].to_vec());
            k += d;
        }
        Ok(Self { blocks })
    }

    pub fn concat(&self, other: &ParamPoint) -> ParamPoint {
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        ParamPoint { blocks }
    }

    /// Euclidean distance between flattened points of the same shape.
    pub fn distance(&self, other: &ParamPoint) -> f64 {
        (self.flatten() - other.flatten()).norm()
    }

    fn check(&self, entry: &CatalogEntry, w: &Word) -> Result<()> {
        if self.blocks.len() != w.len() {
            return Err(Error::ParamMismatch(format!(
                "{} blocks for a word of length {}",
                self.blocks.len(),
                w.len()
            )));
        }
        for (id, block) in w.letters().iter().zip(&self.blocks) {
            entry.letter(id)?.check_domain(block)?;
        }
        Ok(())
    }
}

fn factors(entry: &CatalogEntry, w: &Word, p: &ParamPoint) -> Result<Vec<CMatrix>> {
    p.check(entry, w)?;
    w.letters()
        .iter()
        .zip(&p.blocks)
        .map(|(id, block)| entry.letter(id)?.chart_at(block))
        .collect()
}

/// `mu_w(p)`: the ordered product of the chart values.
pub fn evaluate(entry: &CatalogEntry, w: &Word, p: &ParamPoint) -> Result<CMatrix> {
    let n = entry.group.ambient_size;
    Ok(factors(entry, w, p)?.iter().fold(CMatrix::identity(n, n), |acc, x| acc * x))
}

/// Derivative of `mu_w` at `p` as an `(n^2) x (total parameter dim)` matrix;
/// rows index matrix entries row-major.
///
/// The column for coordinate `k` of letter `i` is
/// `vec(x_1 ... x_{i-1} * dX_i/dp_k * x_{i+1} ... x_l)`.
pub fn jacobian(entry: &CatalogEntry, w: &Word, p: &ParamPoint) -> Result<CMatrix> {
    let xs = factors(entry, w, p)?;
    let n = entry.group.ambient_size;
    let l = xs.len();
    let mut prefix = Vec::with_capacity(l + 1);
    prefix.push(CMatrix::identity(n, n));
    for x in &xs {
        let next = prefix.last().unwrap() * x;
        prefix.push(next);
    }
    let mut suffix = vec![CMatrix::identity(n, n); l + 1];
    for i in (0..l).rev() {
        suffix[i] = &xs[i] * &suffix[i + 1];
    }

    let total: usize = p.blocks.iter().map(Vec::len).sum();
    let mut jac = CMatrix::zeros(n * n, total);
    let mut col = 0;
    for (i, (id, block)) in w.letters().iter().zip(&p.blocks).enumerate() {
        for t in entry.letter(id)?.tangent_basis(block)? {
            let d = &prefix[i] * t * &suffix[i + 1];
            jac.set_column(col, &vec_row_major(&d));
            col += 1;
        }
    }
    Ok(jac)
}

/// Collapse every run `bb...b` to a single `b` (the letters must be subgroups).
pub fn normalize(entry: &CatalogEntry, w: &Word) -> Result<Word> {
    Ok(normalize_with_point(entry, w, None)?.0)
}

/// [`normalize`] together with a parameter point on the collapsed word that
/// has the same product as `p`.
pub fn normalize_point(
    entry: &CatalogEntry,
    w: &Word,
    p: &ParamPoint,
) -> Result<(Word, ParamPoint)> {
    let (word, point) = normalize_with_point(entry, w, Some(p))?;
    Ok((word, point.expect("point requested")))
}

fn normalize_with_point(
    entry: &CatalogEntry,
    w: &Word,
    p: Option<&ParamPoint>,
) -> Result<(Word, Option<ParamPoint>)> {
    if let Some(p) = p {
        p.check(entry, w)?;
    }
    let mut letters: Vec<LetterId> = Vec::with_capacity(w.len());
    let mut blocks: Vec<Vec<C64>> = Vec::new();
    for (i, id) in w.letters().iter().enumerate() {
        if letters.last() == Some(id) {
            let letter = entry.letter(id)?;
            if !letter.subgroup {
                return Err(Error::NotSubgroup(id.to_string()));
            }
            if let Some(p) = p {
                let last = blocks.last_mut().expect("block per letter");
                *last = letter.compose(last, &p.blocks[i])?;
            }
        } else {
            entry.letter(id)?;
            letters.push(id.clone());
            if let Some(p) = p {
                blocks.push(p.blocks[i].clone());
            }
        }
    }
    Ok((Word(letters), p.map(|_| ParamPoint { blocks })))
}

/// Jacobian rank at one parameter point.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalSample {
    pub point: ParamPoint,
    pub jacobian_rank: usize,
    /// `jacobian_rank < dim G`.
    pub is_critical: bool,
}

pub fn critical_sample(
    entry: &CatalogEntry,
    w: &Word,
    p: ParamPoint,
    tol: &Tolerances,
) -> Result<CriticalSample> {
    let rank = numerical_rank(&jacobian(entry, w, &p)?, tol);
    Ok(CriticalSample { point: p, jacobian_rank: rank, is_critical: rank < entry.group.dim })
}

/// Jacobian ranks at `trials` seeded random points. A maximum equal to
/// `dim G` is numerical evidence that `w` is dominant.
pub fn sample_rank(
    entry: &CatalogEntry,
    w: &Word,
    trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<(usize, Vec<CriticalSample>)> {
    let mut r = rng(seed);
    let mut samples = Vec::with_capacity(trials);
    for _ in 0..trials.max(1) {
        let p = ParamPoint::random(entry, w, &mut r)?;
        samples.push(critical_sample(entry, w, p, tol)?);
    }
    let max = samples.iter().map(|s| s.jacobian_rank).max().unwrap_or(0);
    Ok((max, samples))
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundtripReport {
    pub trials: usize,
    pub recovered: usize,
    /// Samples whose image fell in the excluded locus of the inverse.
    pub excluded_hits: usize,
    pub max_error: f64,
    pub failures: Vec<String>,
}

/// Check `inverse(mu_w(p)) = p` at random points.
///
/// Samples for which `inverse` reports [`Error::ExcludedLocus`] are redrawn
/// (at most `10 * trials` draws in total) and counted. A point is recovered
/// when the relative error `|p' - p| / (1 + |p|)` is at most `accept`.
pub fn check_birational_roundtrip<F>(
    entry: &CatalogEntry,
    w: &Word,
    inverse: F,
    trials: usize,
    seed: u64,
    accept: f64,
) -> Result<RoundtripReport>
where
    F: Fn(&CMatrix) -> Result<ParamPoint>,
{
    let mut r = rng(seed);
    let mut report = RoundtripReport {
        trials,
        recovered: 0,
        excluded_hits: 0,
        max_error: 0.0,
        failures: Vec::new(),
    };
    let mut done = 0;
    let mut draws = 0;
    while done < trials && draws < 10 * trials.max(1) {
        draws += 1;
        let p = ParamPoint::random(entry, w, &mut r)?;
        let g = evaluate(entry, w, &p)?;
        match inverse(&g) {
            Ok(q) => {
                done += 1;
                let err = if q.blocks.len() == p.blocks.len() {
                    q.distance(&p) / (1.0 + p.flatten().norm())
                } else {
                    f64::INFINITY
                };
                report.max_error = report.max_error.max(err);
                if err <= accept {
                    report.recovered += 1;
                } else {
                    report.failures.push(format!("relative error {err:.3e}"));
                }
            }
            Err(Error::ExcludedLocus(_)) => report.excluded_hits += 1,
            Err(e) => {
                done += 1;
                report.failures.push(e.to_string());
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct ContainmentReport {
    pub trials: usize,
    /// Trials with `x` outside `J_u` or `y` outside `J_w`.
    pub noncritical_factor: usize,
    /// Trials where the concatenation was critical.
    pub critical_concatenation: usize,
    /// Points contradicting `J_{uw} ⊆ J_u × J_w`.
    pub violations: Vec<String>,
}

/// Tests `J_{uw} ⊆ J_u × J_w` through its contrapositive: whenever `x ∉ J_u`
/// or `y ∉ J_w`, the point `(x, y)` must not lie in `J_{uw}`.
///
/// Every fourth trial puts `x` at the unit point and every fourth (offset by
/// two) puts `y` there, so critical factors are exercised as well.
pub fn critical_containment_check(
    entry: &CatalogEntry,
    u: &Word,
    w: &Word,
    trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ContainmentReport> {
    let mut r = rng(seed);
    let uw = u.concat(w);
    let dim = entry.group.dim;
    let mut report = ContainmentReport {
        trials,
        noncritical_factor: 0,
        critical_concatenation: 0,
        violations: Vec::new(),
    };
    for t in 0..trials {
        let x = if t % 4 == 1 || t % 4 == 3 && t % 8 == 3 {
            ParamPoint::unit(entry, u)?
        } else {
            ParamPoint::random(entry, u, &mut r)?
        };
        let y = if t % 4 == 2 || t % 4 == 3 {
            ParamPoint::unit(entry, w)?
        } else {
            ParamPoint::random(entry, w, &mut r)?
        };
        let ru = numerical_rank(&jacobian(entry, u, &x)?, tol);
        let rw = numerical_rank(&jacobian(entry, w, &y)?, tol);
        let ruw = numerical_rank(&jacobian(entry, &uw, &x.concat(&y))?, tol);
        if ruw < dim {
            report.critical_concatenation += 1;
        }
        if ru == dim || rw == dim {
            report.noncritical_factor += 1;
            if ruw < dim {
                report.violations.push(format!(
                    "trial {t}: rank u = {ru}, rank w = {rw}, rank uw = {ruw} < {dim}"
                ));
            }
        }
    }
    Ok(report)
}

/// Frobenius residual `|mu_w(p) - g|`.
pub fn residual(entry: &CatalogEntry, w: &Word, p: &ParamPoint, g: &CMatrix) -> Result<f64> {
    Ok(frobenius_distance(&evaluate(entry, w, p)?, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_gln, catalog_sl2, catalog_torus2};
    use crate::numeric::{re, real_matrix};

    fn pt(vals: &[f64]) -> ParamPoint {
        ParamPoint::new(vals.iter().map(|&v| vec![re(v)]).collect())
    }

    #[test]
    fn evaluate_examples() {
        let e = catalog_sl2();
        let w = e.word("121").unwrap();
        let g = evaluate(&e, &w, &pt(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(g, real_matrix(&[&[3.0, 10.0], &[2.0, 7.0]]));

        let w = e.word("1212").unwrap();
        assert_eq!(evaluate(&e, &w, &pt(&[0.0; 4])).unwrap(), CMatrix::identity(2, 2));

        let t = catalog_torus2();
        let w = t.word("1212").unwrap();
        let g = evaluate(&t, &w, &pt(&[1.0, 1.0, 1.0, 2.0])).unwrap();
        assert_eq!(g, real_matrix(&[&[4.0, 0.0], &[0.0, 2.0]]));
    }

    #[test]
    fn evaluate_rejects_zero_torus_coordinate() {
        let t = catalog_torus2();
        let w = t.word("12").unwrap();
        let err = evaluate(&t, &w, &pt(&[1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::DomainViolation { .. }));
        assert!(matches!(evaluate(&t, &w, &pt(&[1.0])), Err(Error::ParamMismatch(_))));
    }

    #[test]
    fn eq_parm_formula() {
        // x1(a) x2(b) x1(c) = [[1+ab, a+c+abc], [b, 1+bc]]
        let e = catalog_sl2();
        let w = e.word("121").unwrap();
        let (a, b, c) = (0.3, -1.7, 2.2);
        let g = evaluate(&e, &w, &pt(&[a, b, c])).unwrap();
        let expected = real_matrix(&[&[1.0 + a * b, a + c + a * b * c], &[b, 1.0 + b * c]]);
        assert!((g - expected).norm() < 1e-14);
    }

    #[test]
    fn identity_point_rank_two() {
        let e = catalog_sl2();
        let tol = Tolerances::default();
        for s in ["12", "121", "1212", "121212", "21"] {
            let w = e.word(s).unwrap();
            let j = jacobian(&e, &w, &ParamPoint::unit(&e, &w).unwrap()).unwrap();
            assert_eq!(numerical_rank(&j, &tol), 2, "{s}");
        }
        let w = e.word("121").unwrap();
        let j = jacobian(&e, &w, &pt(&[0.5, 2.0, -1.0])).unwrap();
        assert_eq!(numerical_rank(&j, &tol), 3);
    }

    #[test]
    fn normalize_examples() {
        let e = catalog_sl2();
        let n = |s: &str| normalize(&e, &e.word(s).unwrap()).unwrap().to_string();
        assert_eq!(n("1122"), "12");
        assert_eq!(n("2112"), "212");
        assert_eq!(n("121"), "121");
        assert_eq!(n("111"), "1");
    }

    #[test]
    fn normalize_point_keeps_product() {
        let e = catalog_gln(3);
        let w = e.word("U.U.L.L.U").unwrap();
        let mut r = rng(4);
        let p = ParamPoint::random(&e, &w, &mut r).unwrap();
        let (nw, np) = normalize_point(&e, &w, &p).unwrap();
        assert_eq!(nw.to_string(), "U.L.U");
        let a = evaluate(&e, &w, &p).unwrap();
        let b = evaluate(&e, &nw, &np).unwrap();
        assert!((a - b).norm() < 1e-9);
    }

    #[test]
    fn containment_examples() {
        let e = catalog_sl2();
        let w = |s: &str| e.word(s).unwrap();
        assert!(contains_consecutive(&w("121212"), &w("1212")));
        assert!(!contains_consecutive(&w("1122"), &w("121")));
        assert!(contains_consecutive(&w("1212212"), &w("1212")));
        assert!(contains_subsequence(&w("1122"), &w("12")));
        assert!(!contains_subsequence(&w("21"), &w("12")));
        assert!(contains_consecutive_iter(w("121121").letters(), w("121").power_iter(2)));
    }

    #[test]
    fn sample_rank_examples() {
        let tol = Tolerances::default();
        let e = catalog_sl2();
        assert_eq!(sample_rank(&e, &e.word("12").unwrap(), 20, 1, &tol).unwrap().0, 2);
        assert_eq!(sample_rank(&e, &e.word("121").unwrap(), 20, 1, &tol).unwrap().0, 3);
        let t = catalog_torus2();
        assert_eq!(sample_rank(&t, &t.word("1212").unwrap(), 20, 1, &tol).unwrap().0, 2);
    }

    #[test]
    fn containment_check_examples() {
        let tol = Tolerances::default();
        let e = catalog_sl2();
        let w = |s: &str| e.word(s).unwrap();
        let rep = critical_containment_check(&e, &w("121"), &w("121"), 20, 3, &tol).unwrap();
        assert!(rep.violations.is_empty());
        assert!(rep.noncritical_factor > 0);
        let rep = critical_containment_check(&e, &w("12"), &w("12"), 8, 3, &tol).unwrap();
        assert!(rep.violations.is_empty());
        let t = catalog_torus2();
        let rep = critical_containment_check(&t, &t.word("12").unwrap(), &t.word("12").unwrap(), 8, 3, &tol)
            .unwrap();
        assert!(rep.violations.is_empty());
    }

    #[test]
    fn word_serde_roundtrip() {
        let e = catalog_gln(2);
        let w = e.word("U-.T.U").unwrap();
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, "\"U-.T.U\"");
        let back: Word = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
    }
}
