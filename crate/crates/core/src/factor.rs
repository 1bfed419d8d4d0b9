//! Closed-form and retrying solvers for `mu_w(p) = g` on the canonical words.

use serde::Serialize;

use crate::catalog::{
    catalog_gln, catalog_sl2, catalog_sp2n, elementary_id, symmetric_coords, CatalogEntry,
};
use crate::error::{Error, Result};
use crate::group::{GroupDescriptor, GroupName};
use crate::letter::LetterId;
use crate::numeric::{
    least_squares_solve, max_abs, numerical_rank, re, singular_values, try_inverse, CMatrix,
    Tolerances, C64,
};
use crate::random::{complex_gaussian, derive_seed, rng};
use crate::word::{evaluate, ParamPoint, Word};

/// Parameters `p` with `mu_w(p) = target` up to `residual`.
#[derive(Clone, Debug, Serialize)]
pub struct Factorization {
    pub word: Word,
    pub params: ParamPoint,
    #[serde(with = "crate::io::matrix")]
    pub target: CMatrix,
    /// `|mu_w(params) - target|_F`.
    pub residual: f64,
    /// Number of rejected trial corrections before success.
    pub retries: usize,
    /// Seed of the `Sp_2n` catalog whose subspace `S` was used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog_seed: Option<u64>,
}

fn finish(
    entry: &CatalogEntry,
    word: Word,
    params: ParamPoint,
    target: &CMatrix,
    retries: usize,
    tol: &Tolerances,
) -> Result<Factorization> {
    let residual = (evaluate(entry, &word, &params)? - target).norm();
    if !(residual < tol.residual_tol) {
        return Err(Error::ResidualTooLarge { residual });
    }
    Ok(Factorization { word, params, target: target.clone(), residual, retries, catalog_seed: None })
}

fn require_member(group: GroupDescriptor, g: &CMatrix, tol: &Tolerances) -> Result<()> {
    let n = group.ambient_size;
    if g.shape() != (n, n) {
        return Err(Error::Shape(format!("expected a {n}x{n} matrix, got {}x{}", g.nrows(), g.ncols())));
    }
    if !crate::numeric::is_finite(g) {
        return Err(Error::NonFinite);
    }
    if group.name == GroupName::Gln {
        let scale = max_abs(g);
        if scale == 0.0 || numerical_rank(&g.unscale(scale), tol) < n {
            return Err(Error::NotInvertible);
        }
        return Ok(());
    }
    let residual = group.membership_residual(g, tol);
    if residual < tol.residual_tol {
        Ok(())
    } else {
        Err(Error::NotInGroup { residual })
    }
}

fn single(z: C64) -> Vec<C64> {
    vec![z]
}

/// Solve `x1(a) x2(b) x1(c) = g` in `SL_2`:
/// `b = g21`, `c = (g22 - 1) / g21`, `a = (g11 - 1) / g21`.
pub fn sl2_121(g: &CMatrix, tol: &Tolerances) -> Result<Factorization> {
    require_member(GroupDescriptor::sl2(), g, tol)?;
    let b = g[(1, 0)];
    if b.norm() <= tol.rank_tol {
        return Err(Error::ExcludedLocus(format!(
            "g21 = {:.3e} vanishes; 121 only reaches matrices with g21 != 0",
            b.norm()
        )));
    }
    let a = (g[(0, 0)] - re(1.0)) / b;
    let c = (g[(1, 1)] - re(1.0)) / b;
    let e = catalog_sl2();
    let w = e.word("121")?;
    finish(&e, w, ParamPoint::new(vec![single(a), single(b), single(c)]), g, 0, tol)
}

/// Solve `x1(a) x2(b) x1(c) x2(d) = g`. Uses `d = 0` when `g21 != 0` and
/// `d = 1` otherwise, so the total map is surjective onto `SL_2`.
pub fn sl2_1212(g: &CMatrix, tol: &Tolerances) -> Result<Factorization> {
    require_member(GroupDescriptor::sl2(), g, tol)?;
    let d = if g[(1, 0)].norm() > tol.rank_tol { 0.0 } else { 1.0 };
    let mut shift = CMatrix::identity(2, 2);
    shift[(1, 0)] = re(-d);
    let f = sl2_121(&(g * shift), tol)?;
    let e = catalog_sl2();
    let mut blocks = f.params.blocks;
    blocks.push(single(re(d)));
    finish(&e, e.word("1212")?, ParamPoint::new(blocks), g, 0, tol)
}

/// Crout form `g = L U`: `L` lower-triangular with free diagonal, `U` unit
/// upper-triangular. Fails at the first (1-based) leading principal minor
/// that vanishes relative to the scale of `g`.
pub fn lu_crout(g: &CMatrix, tol: &Tolerances) -> Result<(CMatrix, CMatrix)> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(Error::Shape("LU needs a square matrix".into()));
    }
    let scale = max_abs(g);
    let mut l = CMatrix::zeros(n, n);
    let mut u = CMatrix::identity(n, n);
    for k in 0..n {
        for i in k..n {
            let s: C64 = (0..k).map(|s| l[(i, s)] * u[(s, k)]).sum();
            l[(i, k)] = g[(i, k)] - s;
        }
        let pivot = l[(k, k)];
        if pivot.norm() <= tol.rank_tol * scale {
            return Err(Error::LeadingMinorZero { index: k + 1 });
        }
        for j in (k + 1)..n {
            let s: C64 = (0..k).map(|s| l[(k, s)] * u[(s, j)]).sum();
            u[(k, j)] = (g[(k, j)] - s) / pivot;
        }
    }
    Ok((l, u))
}

fn lower_coords(l: &CMatrix) -> Vec<C64> {
    let n = l.nrows();
    (0..n).flat_map(|i| (0..=i).map(move |j| (i, j))).map(|p| l[p]).collect()
}

fn strict_upper_coords(u: &CMatrix) -> Vec<C64> {
    let n = u.nrows();
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|p| u[p]).collect()
}

fn strict_lower_coords(m: &CMatrix) -> Vec<C64> {
    let n = m.nrows();
    (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).map(|p| m[p]).collect()
}

/// `g = L U` on the word `L.U`.
pub fn gln_lu(g: &CMatrix, tol: &Tolerances) -> Result<Factorization> {
    let n = g.nrows();
    require_member(GroupDescriptor::gln(n), g, tol)?;
    let (l, u) = lu_crout(g, tol)?;
    let e = catalog_gln(n);
    let p = ParamPoint::new(vec![lower_coords(&l), strict_upper_coords(&u)]);
    finish(&e, e.word("12")?, p, g, 0, tol)
}

const RANDOM_RETRIES: usize = 20;

/// Trial unipotent corrections: the identity, the all-ones unipotent matrix,
/// then seeded random ones with unit-scale complex Gaussian entries.
fn unipotent_candidates(n: usize, upper: bool, seed: u64) -> impl Iterator<Item = CMatrix> {
    let mut r = rng(seed);
    let in_part = move |i: usize, j: usize| if upper { i < j } else { i > j };
    let ones = CMatrix::from_fn(n, n, |i, j| {
        if i == j || in_part(i, j) {
            re(1.0)
        } else {
            re(0.0)
        }
    });
    let random: Vec<CMatrix> = (0..RANDOM_RETRIES)
        .map(|_| {
            let mut m = CMatrix::identity(n, n);
            for i in 0..n {
                for j in 0..n {
                    if in_part(i, j) {
                        m[(i, j)] = complex_gaussian(&mut r);
                    }
                }
            }
            m
        })
        .collect();
    std::iter::once(CMatrix::identity(n, n)).chain(std::iter::once(ones)).chain(random)
}

fn unit_triangular_inverse(m: &CMatrix) -> CMatrix {
    try_inverse(m).expect("unit triangular matrices are invertible")
}

/// `g = u L U` on the word `U.L.U`: the first `u` among the trial
/// corrections for which `u^-1 g` has an accurate LU factorisation.
pub fn gln_ulu(g: &CMatrix, seed: u64, tol: &Tolerances) -> Result<Factorization> {
    let n = g.nrows();
    require_member(GroupDescriptor::gln(n), g, tol)?;
    let e = catalog_gln(n);
    let w = e.word("212")?;
    let mut attempts = 0;
    for u0 in unipotent_candidates(n, true, derive_seed(seed, "ulu")) {
        attempts += 1;
        let Ok((l, u)) = lu_crout(&(unit_triangular_inverse(&u0) * g), tol) else { continue };
        let p = ParamPoint::new(vec![
            strict_upper_coords(&u0),
            lower_coords(&l),
            strict_upper_coords(&u),
        ]);
        if let Ok(f) = finish(&e, w.clone(), p, g, attempts - 1, tol) {
            return Ok(f);
        }
    }
    Err(Error::RetriesExhausted { attempts })
}

/// `g = U- T U+` on the word `U-.T.U`, from `L = U- T`.
pub fn gln_ldu(g: &CMatrix, tol: &Tolerances) -> Result<Factorization> {
    let n = g.nrows();
    require_member(GroupDescriptor::gln(n), g, tol)?;
    let (lm, um, t) = ldu_blocks(g, tol)?;
    let e = catalog_gln(n);
    let p = ParamPoint::new(vec![
        strict_lower_coords(&lm),
        (0..n).map(|i| t[i]).collect(),
        strict_upper_coords(&um),
    ]);
    finish(&e, e.word("U-.T.U")?, p, g, 0, tol)
}

/// `(U-, U+, diag T)` with `g = U- diag(T) U+`.
fn ldu_blocks(g: &CMatrix, tol: &Tolerances) -> Result<(CMatrix, CMatrix, Vec<C64>)> {
    let (l, u) = lu_crout(g, tol)?;
    let n = g.nrows();
    let t: Vec<C64> = (0..n).map(|i| l[(i, i)]).collect();
    let lm = CMatrix::from_fn(n, n, |i, j| l[(i, j)] / t[j]);
    Ok((lm, u, t))
}

/// Elementary letters whose ordered product is a unit lower-triangular
/// matrix `M` with parameters equal to its entries: column `j` left to right,
/// rows `i > j` within a column.
fn lower_elementary_order(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|j| ((j + 1)..n).map(move |i| (i, j))).collect()
}

/// The same for unit upper-triangular matrices: rows `j` from the bottom up,
/// columns `i > j` within a row.
fn upper_elementary_order(n: usize) -> Vec<(usize, usize)> {
    (0..n).rev().flat_map(|j| ((j + 1)..n).map(move |i| (j, i))).collect()
}

/// The one-parameter word for `GL_n`: the lower elementary letters, the
/// diagonal letters `D1 ... Dn`, the upper elementary letters and the lower
/// elementary letters again. It has length `3l + n` with `l = n(n-1)/2`.
pub fn one_param_word(n: usize) -> Word {
    assert!(n >= 1, "GL_n needs n >= 1");
    let lower: Vec<LetterId> =
        lower_elementary_order(n).iter().map(|&(i, j)| LetterId(elementary_id(n, i, j))).collect();
    let mut ids = lower.clone();
    ids.extend((1..=n).map(|i| LetterId(format!("D{i}"))));
    ids.extend(upper_elementary_order(n).iter().map(|&(i, j)| LetterId(elementary_id(n, i, j))));
    ids.extend(lower);
    Word::new(ids).expect("nonempty for n >= 1")
}

/// `(3n^2 - n) / 2`.
pub fn one_param_length(n: usize) -> usize {
    (3 * n * n - n) / 2
}

/// The `SL_2` instance `U- T U+ U-` over the catalog letters: `2312`.
pub fn one_param_word_sl2() -> Word {
    catalog_sl2().word("2312").expect("letters exist")
}

/// Picks a trailing `u- in U-` so that `g u-^-1` lies in the big cell, then
/// returns `(U-, diag T, U+, u-)`.
fn big_cell_with_tail(
    g: &CMatrix,
    seed: u64,
    tol: &Tolerances,
    accept: impl Fn(&CMatrix, &CMatrix, &[C64], &CMatrix, usize) -> Option<Factorization>,
) -> Result<Factorization> {
    let n = g.nrows();
    let mut attempts = 0;
    for tail in unipotent_candidates(n, false, derive_seed(seed, "one-param")) {
        attempts += 1;
        let Ok((lm, um, t)) = ldu_blocks(&(g * unit_triangular_inverse(&tail)), tol) else {
            continue;
        };
        if let Some(f) = accept(&lm, &um, &t, &tail, attempts - 1) {
            return Ok(f);
        }
    }
    Err(Error::RetriesExhausted { attempts })
}

/// Factorisation along [`one_param_word`]`(n)`.
pub fn one_param_factor(g: &CMatrix, seed: u64, tol: &Tolerances) -> Result<Factorization> {
    let n = g.nrows();
    require_member(GroupDescriptor::gln(n), g, tol)?;
    let e = catalog_gln(n);
    let w = one_param_word(n);
    big_cell_with_tail(g, seed, tol, |lm, um, t, tail, retries| {
        let mut blocks: Vec<Vec<C64>> = Vec::with_capacity(w.len());
        blocks.extend(lower_elementary_order(n).iter().map(|&p| single(lm[p])));
        blocks.extend(t.iter().map(|&z| single(z)));
        blocks.extend(upper_elementary_order(n).iter().map(|&p| single(um[p])));
        blocks.extend(lower_elementary_order(n).iter().map(|&p| single(tail[p])));
        finish(&e, w.clone(), ParamPoint::new(blocks), g, retries, tol).ok()
    })
}

/// Factorisation along `2312` in `SL_2`: `x2(a) diag(t, 1/t) x1(b) x2(c)`.
pub fn one_param_factor_sl2(g: &CMatrix, seed: u64, tol: &Tolerances) -> Result<Factorization> {
    require_member(GroupDescriptor::sl2(), g, tol)?;
    let e = catalog_sl2();
    let w = one_param_word_sl2();
    big_cell_with_tail(g, seed, tol, |lm, um, t, tail, retries| {
        let blocks = vec![
            single(lm[(1, 0)]),
            single(t[0]),
            single(um[(0, 1)]),
            single(tail[(1, 0)]),
        ];
        finish(&e, w.clone(), ParamPoint::new(blocks), g, retries, tol).ok()
    })
}

fn blocks_of(g: &CMatrix) -> (CMatrix, CMatrix, CMatrix, CMatrix) {
    let n = g.nrows() / 2;
    (
        g.view((0, 0), (n, n)).into_owned(),
        g.view((0, n), (n, n)).into_owned(),
        g.view((n, 0), (n, n)).into_owned(),
        g.view((n, n), (n, n)).into_owned(),
    )
}

fn asymmetry(m: &CMatrix) -> f64 {
    (m - m.transpose()).norm()
}

/// The symmetric blocks `(A, B, A')` with
/// `[[1,0],[A,1]] [[1,B],[0,1]] [[1,0],[A',1]] = g` for `g` in `Z`, i.e.
/// `B = D`, `A' = D^-1 (C - 1)`, `A = (F - 1) D^-1` where `g = [[C, D], [*, F]]`.
/// No symmetrisation is applied.
pub fn sp2n_121_blocks(g: &CMatrix, tol: &Tolerances) -> Result<(CMatrix, CMatrix, CMatrix)> {
    if !g.nrows().is_multiple_of(2) || g.nrows() == 0 {
        return Err(Error::Shape("Sp_2n needs an even size".into()));
    }
    let n = g.nrows() / 2;
    require_member(GroupDescriptor::sp2n(n), g, tol)?;
    let (c, d, _, f) = blocks_of(g);
    let asym = asymmetry(&d);
    if asym > tol.residual_tol * (1.0 + d.norm()) {
        return Err(Error::DNotSymmetric { asymmetry: asym });
    }
    let sv = singular_values(&d);
    if sv.last().copied().unwrap_or(0.0) <= tol.rank_tol * sv[0].max(1.0) {
        return Err(Error::DSingular);
    }
    let dinv = try_inverse(&d).ok_or(Error::DSingular)?;
    let id = CMatrix::identity(n, n);
    let a_prime = &dinv * (c - &id);
    let a = (f - &id) * &dinv;
    Ok((a, d, a_prime))
}

fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.transpose()) * re(0.5)
}

/// Solve `x1(A) x2(B) x1(A') = g` for `g` in `Z = {D = D^T}`.
pub fn sp2n_121_onto_z(g: &CMatrix, tol: &Tolerances) -> Result<Factorization> {
    let (a, b, a_prime) = sp2n_121_blocks(g, tol)?;
    let n = g.nrows() / 2;
    let e = catalog_sp2n(n, 0);
    let blocks = [a, b, a_prime].iter().map(|m| symmetric_coords(&symmetrize(m))).collect();
    finish(&e, e.word("121")?, ParamPoint::new(blocks), g, 0, tol)
}

const NULL_PERTURBATIONS: usize = 10;

/// Solve `x1(A) x2(B) x1(A') x3(B_S) = g` with the subspace `S` of `entry`.
///
/// `B_S` is chosen so that the upper-right block `D - C B_S` of
/// `g x3(-B_S)` is symmetric. When those equations leave freedom, points of
/// the solution space are tried (seeded) until that block is invertible.
pub fn sp2n_1213(
    g: &CMatrix,
    entry: &CatalogEntry,
    seed: u64,
    tol: &Tolerances,
) -> Result<Factorization> {
    let split = entry
        .symplectic_split()
        .ok_or_else(|| Error::Unsupported("1213 outside Sp_2n".into()))?;
    let n = split.n;
    require_member(entry.group, g, tol)?;
    let (c, d, _, _) = blocks_of(g);
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let s_dim = split.s_basis.len();

    let mut m = CMatrix::zeros(pairs.len(), s_dim);
    for (k, v) in split.s_basis.iter().enumerate() {
        let cs = &c * split.combine(std::slice::from_ref(v), &[re(1.0)]);
        for (r, &(i, j)) in pairs.iter().enumerate() {
            m[(r, k)] = cs[(i, j)] - cs[(j, i)];
        }
    }
    let rhs = CMatrix::from_fn(pairs.len(), 1, |r, _| d[pairs[r]] - d[(pairs[r].1, pairs[r].0)]);
    let c0 = least_squares_solve(&m, &rhs);
    let scale = 1.0 + d.norm() + c.norm();
    if (&m * &c0 - &rhs).norm() > tol.residual_tol * scale {
        return Err(Error::LinearSystemSingular { rank: numerical_rank(&m, tol), needed: s_dim });
    }

    let rank = if m.is_empty() { 0 } else { numerical_rank(&m, tol) };
    let null: Vec<CMatrix> = if rank < s_dim {
        let svd = m.clone().svd(false, true);
        let mut v_t = svd.v_t.expect("requested");
        if v_t.nrows() < s_dim {
            v_t = CMatrix::identity(s_dim, s_dim);
        }
        let sv = svd.singular_values;
        let smax = sv.iter().copied().fold(0.0, f64::max);
        (0..v_t.nrows())
            .filter(|&k| k >= sv.len() || sv[k] <= tol.rank_tol * smax)
            .map(|k| CMatrix::from_iterator(s_dim, 1, v_t.row(k).iter().map(|z| z.conj())))
            .collect()
    } else {
        Vec::new()
    };

    let three = entry.letter(&"3".into())?;
    let mut r = rng(derive_seed(seed, "sp2n-1213"));
    let tries = if null.is_empty() { 1 } else { 1 + NULL_PERTURBATIONS };
    let mut last = Error::DSingular;
    for attempt in 0..tries {
        let mut coeffs = c0.clone();
        if attempt > 0 {
            for v in &null {
                coeffs += v * complex_gaussian(&mut r);
            }
        }
        let bs: Vec<C64> = coeffs.iter().copied().collect();
        let neg: Vec<C64> = bs.iter().map(|z| -z).collect();
        let h = g * three.chart_at(&neg)?;
        match sp2n_121_onto_z(&h, tol) {
            Ok(f) => {
                let mut blocks = f.params.blocks;
                blocks.push(bs);
                let mut out = finish(entry, entry.word("1213")?, ParamPoint::new(blocks), g, attempt, tol)?;
                out.catalog_seed = split_seed(entry);
                return Ok(out);
            }
            Err(e @ (Error::DSingular | Error::DNotSymmetric { .. })) => last = e,
            Err(e) => return Err(e),
        }
    }
    match last {
        Error::DNotSymmetric { .. } => Err(Error::LinearSystemSingular { rank, needed: s_dim }),
        e => Err(e),
    }
}

fn split_seed(entry: &CatalogEntry) -> Option<u64> {
    entry.symplectic_split().map(|s| s.seed)
}

const REGENERATIONS: usize = 5;

/// [`sp2n_1213`] that regenerates the subspace `S` from derived seeds when the
/// linear step or the `121` step is singular. Returns the catalog used.
pub fn sp2n_1213_regenerating(
    g: &CMatrix,
    n: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<(Factorization, CatalogEntry)> {
    let mut total = 0;
    for k in 0..=REGENERATIONS {
        let s = if k == 0 { seed } else { derive_seed(seed, &format!("regenerate-{k}")) };
        let entry = catalog_sp2n(n, s);
        match sp2n_1213(g, &entry, seed, tol) {
            Ok(mut f) => {
                f.retries += total;
                return Ok((f, entry));
            }
            Err(Error::LinearSystemSingular { .. } | Error::DSingular | Error::ResidualTooLarge { .. }) => {
                total += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetriesExhausted { attempts: total })
}
