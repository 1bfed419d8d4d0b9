//! The groups and letters: shears and the diagonal torus in `SL_2`, triangular
//! and elementary subgroups of `GL_n`, symmetric-block subgroups of
//! `Sp_{2n}`, and monomial curves in `(C*)^2`.

use nalgebra::DMatrix;

use crate::certify::{Polarity, Property, PropertyCertificate};
use crate::error::{Error, Result};
use crate::group::GroupDescriptor;
use crate::letter::{Chart, CoordKind, Letter, LetterId};
use crate::numeric::{re, CMatrix, C64};
use crate::random::{derive_seed, gaussian, rng};
use crate::word::Word;

/// A group together with its letters and the word facts known about them.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub group: GroupDescriptor,
    letters: Vec<Letter>,
    aliases: Vec<(String, LetterId)>,
    certificates: Vec<PropertyCertificate>,
    symplectic: Option<SymplecticSplit>,
}

impl CatalogEntry {
    fn new(group: GroupDescriptor, letters: Vec<Letter>) -> Self {
        Self { group, letters, aliases: Vec::new(), certificates: Vec::new(), symplectic: None }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn letter(&self, id: &LetterId) -> Result<&Letter> {
        self.letters
            .iter()
            .find(|l| &l.id == id)
            .ok_or_else(|| Error::UnknownLetter(id.to_string()))
    }

    /// Canonical id for a token, following aliases.
    pub fn resolve(&self, token: &str) -> Result<LetterId> {
        if let Some(l) = self.letters.iter().find(|l| l.id.as_str() == token) {
            return Ok(l.id.clone());
        }
        self.aliases
            .iter()
            .find(|(a, _)| a == token)
            .map(|(_, id)| id.clone())
            .ok_or_else(|| Error::UnknownLetter(token.to_owned()))
    }

    /// Parse a word. Dotted strings (`"U.L.U"`) split on dots; otherwise a
    /// string that is itself a letter is a one-letter word and anything else
    /// splits into characters (`"1212"`).
    pub fn word(&self, s: &str) -> Result<Word> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::EmptyWord);
        }
        let tokens: Vec<String> = if s.contains('.') {
            s.split('.').map(str::to_owned).collect()
        } else if self.resolve(s).is_ok() {
            vec![s.to_owned()]
        } else {
            s.chars().map(String::from).collect()
        };
        let ids = tokens.iter().map(|t| self.resolve(t)).collect::<Result<Vec<_>>>()?;
        Word::new(ids)
    }

    pub fn certificates(&self) -> &[PropertyCertificate] {
        &self.certificates
    }

    pub fn symplectic_split(&self) -> Option<&SymplecticSplit> {
        self.symplectic.as_ref()
    }

    pub fn param_dim(&self, w: &Word) -> Result<usize> {
        w.letters().iter().map(|id| self.letter(id).map(Letter::param_dim)).sum()
    }

    /// Every letter of `w` is a subgroup.
    pub fn all_subgroups(&self, w: &Word) -> bool {
        w.letters().iter().all(|id| self.letter(id).map(|l| l.subgroup).unwrap_or(false))
    }

    fn register(&mut self, word: &str, property: Property, polarity: Polarity, citation: &str) {
        let w = self.word(word).expect("catalog word parses");
        self.certificates.push(PropertyCertificate::registered(w, property, polarity, citation));
    }
}

fn elementary(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = re(1.0);
    m
}

fn linear_letter(
    id: &str,
    base: CMatrix,
    basis: Vec<CMatrix>,
    coords: Vec<CoordKind>,
    description: &str,
) -> Letter {
    Letter {
        id: id.into(),
        coords,
        chart: Chart::Linear { base, basis },
        inverse_letter: id.into(),
        subgroup: true,
        description: description.to_owned(),
    }
}

fn unipotent_letter(id: &str, n: usize, positions: &[(usize, usize)], description: &str) -> Letter {
    linear_letter(
        id,
        CMatrix::identity(n, n),
        positions.iter().map(|&(i, j)| elementary(n, i, j)).collect(),
        vec![CoordKind::Affine; positions.len()],
        description,
    )
}

fn monomial_letter(id: &str, exponents: Vec<Vec<i32>>, description: &str) -> Letter {
    let d = exponents.first().map_or(0, Vec::len);
    Letter {
        id: id.into(),
        coords: vec![CoordKind::Torus; d],
        chart: Chart::Monomial { exponents },
        inverse_letter: id.into(),
        subgroup: true,
        description: description.to_owned(),
    }
}

/// `SL_2` with the upper shear `1`, the lower shear `2` and the diagonal
/// torus `3: t -> diag(t, 1/t)`.
pub fn catalog_sl2() -> CatalogEntry {
    let letters = vec![
        unipotent_letter("1", 2, &[(0, 1)], "upper shear x1(a)"),
        unipotent_letter("2", 2, &[(1, 0)], "lower shear x2(a)"),
        monomial_letter("3", vec![vec![1], vec![-1]], "diagonal torus diag(t, 1/t)"),
    ];
    let mut e = CatalogEntry::new(GroupDescriptor::sl2(), letters);
    use Polarity::*;
    use Property::*;
    let inverse = "121 has the rational inverse b = z, c = (w-1)/z, a = (x-1)/z on g21 != 0";
    e.register("121", Dominant, Holds, inverse);
    e.register("121", Birational, Holds, inverse);
    e.register(
        "121",
        Surjective,
        Fails,
        "121 misses matrices with g21 = 0 and g11, g22 not both 1",
    );
    e.register("121", Open, Fails, "121 is not open at the identity point");
    e.register("12", Dominant, Fails, "12 has a two-dimensional image");
    e.register(
        "1212",
        Surjective,
        Holds,
        "1212: right multiplication by x2(-d) moves any g into the image of 121",
    );
    e.register("1212", Open, Holds, "1212 is locally solvable near the identity (b, c with 1 + bc = w)");
    e.register(
        "1212",
        Irreducible,
        Fails,
        "the 1212 fibre over I is the two lines b=d=a+c=0 and c=a=b+d=0",
    );
    e.register(
        "12121",
        Irreducible,
        Fails,
        "the 12121 fibre over I has components c=0=b+d=a+e and d=0=b=a+c+e",
    );
    e.register("121212", Irreducible, Holds, "121212 contains 1212 (open) followed by 212 (birational)");
    e.register("212", Birational, Holds, "212 is birational by the argument for 121 with rows swapped");
    e.register("2312", Irreducible, Holds, "2312 is the big-cell word U- T U+ U- for SL2");
    e
}

/// Letters of `GL_n`: `L`, `U`, `U-`, `T`, the elementary transvection groups
/// `Eij` and the diagonal one-parameter groups `Di` (1-based indices). The
/// aliases `1 = L` and `2 = U` match the LU / ULU words.
pub fn catalog_gln(n: usize) -> CatalogEntry {
    assert!(n >= 1, "GL_n needs n >= 1");
    let mut letters = Vec::new();

    let lower: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
    letters.push(linear_letter(
        "L",
        CMatrix::zeros(n, n),
        lower.iter().map(|&(i, j)| elementary(n, i, j)).collect(),
        lower
            .iter()
            .map(|&(i, j)| if i == j { CoordKind::Torus } else { CoordKind::Affine })
            .collect(),
        "invertible lower-triangular matrices",
    ));
    let strict_upper: Vec<(usize, usize)> =
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let strict_lower: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
    letters.push(unipotent_letter("U", n, &strict_upper, "unit upper-triangular matrices"));
    letters.push(unipotent_letter("U-", n, &strict_lower, "unit lower-triangular matrices"));
    let identity_exponents: Vec<Vec<i32>> =
        (0..n).map(|i| (0..n).map(|k| i32::from(i == k)).collect()).collect();
    letters.push(monomial_letter("T", identity_exponents, "invertible diagonal matrices"));

    for i in 0..n {
        for j in 0..n {
            if i != j {
                letters.push(unipotent_letter(
                    &elementary_id(n, i, j),
                    n,
                    &[(i, j)],
                    "elementary transvection group",
                ));
            }
        }
    }
    for i in 0..n {
        let exps = (0..n).map(|r| vec![i32::from(r == i)]).collect();
        letters.push(monomial_letter(&format!("D{}", i + 1), exps, "diagonal one-parameter group"));
    }

    let mut e = CatalogEntry::new(GroupDescriptor::gln(n), letters);
    e.aliases.push(("1".into(), "L".into()));
    e.aliases.push(("2".into(), "U".into()));
    use Polarity::*;
    use Property::*;
    let lu = "L x U -> GL_n is an isomorphism onto the matrices with nonzero leading principal minors";
    let ul = "U x L -> GL_n is the transpose of the LU decomposition";
    e.register("12", Open, Holds, lu);
    e.register("12", Birational, Holds, lu);
    e.register("21", Open, Holds, ul);
    e.register("21", Birational, Holds, ul);
    let ulu = "U x L x U -> GL_n is surjective with irreducible preimages";
    e.register("212", Surjective, Holds, ulu);
    e.register("212", Irreducible, Holds, ulu);
    e
}

/// Id of the elementary letter at 0-based position `(i, j)`.
pub fn elementary_id(n: usize, i: usize, j: usize) -> String {
    if n > 9 {
        format!("E{}_{}", i + 1, j + 1)
    } else {
        format!("E{}{}", i + 1, j + 1)
    }
}

/// Coordinates `(i, j)`, `i <= j`, of the symmetric `n x n` matrices.
pub fn symmetric_positions(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

/// Symmetric matrix from coordinates ordered as in [`symmetric_positions`].
pub fn symmetric_from_coords(n: usize, coords: &[C64]) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for (&(i, j), &z) in symmetric_positions(n).iter().zip(coords) {
        m[(i, j)] = z;
        m[(j, i)] = z;
    }
    m
}

pub fn symmetric_coords(m: &CMatrix) -> Vec<C64> {
    symmetric_positions(m.nrows()).iter().map(|&(i, j)| m[(i, j)]).collect()
}

/// The splitting `Sym_n = S + T` used for the `Sp_{2n}` letters 3 and 4.
///
/// Both bases are orthonormal in the coordinates of
/// [`symmetric_positions`]; `S` has codimension `n`.
#[derive(Clone, Debug)]
pub struct SymplecticSplit {
    pub n: usize,
    pub seed: u64,
    pub s_basis: Vec<Vec<f64>>,
    pub t_basis: Vec<Vec<f64>>,
}

impl SymplecticSplit {
    pub fn generate(n: usize, seed: u64) -> Self {
        let dim = n * (n + 1) / 2;
        let mut r = rng(derive_seed(seed, "sp2n-subspace"));
        let raw = DMatrix::<f64>::from_fn(dim, dim, |_, _| gaussian(&mut r));
        let q = raw.qr().q();
        let col = |k: usize| q.column(k).iter().copied().collect::<Vec<f64>>();
        let s_dim = dim - n;
        Self {
            n,
            seed,
            s_basis: (0..s_dim).map(col).collect(),
            t_basis: (s_dim..dim).map(col).collect(),
        }
    }

    /// Split symmetric coordinates into `(S-coords, T-coords)`.
    pub fn split(&self, coords: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let project = |basis: &[Vec<f64>]| {
            basis
                .iter()
                .map(|v| v.iter().zip(coords).map(|(a, z)| z * *a).sum())
                .collect::<Vec<C64>>()
        };
        (project(&self.s_basis), project(&self.t_basis))
    }

    /// Symmetric matrix `sum_k c_k B_k` for a basis of `S` or `T`.
    pub fn combine(&self, basis: &[Vec<f64>], coeffs: &[C64]) -> CMatrix {
        let dim = self.n * (self.n + 1) / 2;
        let mut coords = vec![re(0.0); dim];
        for (v, c) in basis.iter().zip(coeffs) {
            for (x, a) in coords.iter_mut().zip(v) {
                *x += c * *a;
            }
        }
        symmetric_from_coords(self.n, &coords)
    }
}

fn block(n: usize, sym: &CMatrix, upper: bool) -> CMatrix {
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    let (r0, c0) = if upper { (0, n) } else { (n, 0) };
    m.view_mut((r0, c0), (n, n)).copy_from(sym);
    m
}

/// `Sp_{2n}` with letters `1 = [[1,0],[A,1]]`, `2 = [[1,B],[0,1]]` (`A`, `B`
/// symmetric) and the split of `2` into `3` (`B` in `S`) and `4` (`B` in `T`),
/// where `S` is a pseudo-random codimension-`n` subspace drawn from `seed`.
pub fn catalog_sp2n(n: usize, seed: u64) -> CatalogEntry {
    assert!(n >= 1, "Sp_2n needs n >= 1");
    let size = 2 * n;
    let sym_basis: Vec<CMatrix> = symmetric_positions(n)
        .iter()
        .map(|&(i, j)| {
            let mut m = CMatrix::zeros(n, n);
            m[(i, j)] = re(1.0);
            m[(j, i)] = re(1.0);
            m
        })
        .collect();
    let split = SymplecticSplit::generate(n, seed);
    let id = CMatrix::identity(size, size);
    let sym_dim = sym_basis.len();
    let letters = vec![
        linear_letter(
            "1",
            id.clone(),
            sym_basis.iter().map(|s| block(n, s, false)).collect(),
            vec![CoordKind::Affine; sym_dim],
            "lower symmetric block [[1,0],[A,1]]",
        ),
        linear_letter(
            "2",
            id.clone(),
            sym_basis.iter().map(|s| block(n, s, true)).collect(),
            vec![CoordKind::Affine; sym_dim],
            "upper symmetric block [[1,B],[0,1]]",
        ),
        linear_letter(
            "3",
            id.clone(),
            split
                .s_basis
                .iter()
                .map(|v| block(n, &split.combine(std::slice::from_ref(v), &[re(1.0)]), true))
                .collect(),
            vec![CoordKind::Affine; split.s_basis.len()],
            "upper block with B in the subspace S",
        ),
        linear_letter(
            "4",
            id,
            split
                .t_basis
                .iter()
                .map(|v| block(n, &split.combine(std::slice::from_ref(v), &[re(1.0)]), true))
                .collect(),
            vec![CoordKind::Affine; split.t_basis.len()],
            "upper block with B in the complement T",
        ),
    ];
    let mut e = CatalogEntry::new(GroupDescriptor::sp2n(n), letters);
    e.symplectic = Some(split);
    use Polarity::*;
    use Property::*;
    let w121 = e.word("121").expect("word parses");
    e.certificates.push(PropertyCertificate::registered_onto(
        w121,
        Birational,
        "Z = {upper-right block symmetric}",
        "121 maps birationally onto Z: B = D, A' = D^-1 (C - I), A = (F - I) D^-1",
    ));
    e.register("1213", Birational, Holds, "1213 maps birationally onto Sp_2n");
    e.register("1212", Dominant, Holds, "1212 is dominant: 1213 is birational onto Sp_2n and X3 lies in X2");
    e
}

/// `(C*)^2` with the monomial curves `1: t -> (t, t^2)` and `2: t -> (t^2, t)`.
pub fn catalog_torus2() -> CatalogEntry {
    let letters = vec![
        monomial_letter("1", vec![vec![1], vec![2]], "monomial curve (t, t^2)"),
        monomial_letter("2", vec![vec![2], vec![1]], "monomial curve (t^2, t)"),
    ];
    let mut e = CatalogEntry::new(GroupDescriptor::torus2(), letters);
    let msg = "rows (1,2,1,2), (2,1,2,1) span a non-saturated lattice; the kernel has 3 components";
    e.register("1212", Property::Irreducible, Polarity::Fails, msg);
    let every = e.word("12").expect("word parses");
    e.certificates.push(PropertyCertificate::registered_every(
        every,
        Property::Irreducible,
        Polarity::Fails,
        "no word over {1, 2} is irreducible: every exponent lattice has index 3",
    ));
    e
}
