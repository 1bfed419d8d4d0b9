//! Fibres `mu_w^-1(g)`: documented components, multi-start sampling and the
//! component count of monomial kernels.

use num_bigint::BigInt;
use num_traits::One;
use rand::Rng;
use serde::Serialize;

use crate::catalog::{catalog_sl2, CatalogEntry};
use crate::error::{Error, Result};
use crate::letter::Chart;
use crate::numeric::{
    gauss_newton, least_squares_solve, numerical_rank, re, smith_normal_form, vec_row_major,
    CMatrix, CVector, IntMatrix, Tolerances, C64,
};
use crate::random::{derive_seed, rng};
use crate::word::{evaluate, jacobian, ParamPoint, Word};

/// Points closer than this are the same solution.
pub const DEDUP_THRESHOLD: f64 = 1e-6;
/// A solution belongs to a component when its distance to it is below this.
pub const CLASSIFY_THRESHOLD: f64 = 1e-6;

/// `offset + sum_k s_k directions[k]` in the flattened parameter space.
#[derive(Clone, Debug, Serialize)]
pub struct AffineComponent {
    pub name: String,
    pub offset: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

impl AffineComponent {
    pub fn free_vars(&self) -> usize {
        self.directions.len()
    }

    pub fn point(&self, s: &[C64]) -> CVector {
        let mut v = CVector::from_iterator(self.offset.len(), self.offset.iter().map(|&x| re(x)));
        for (d, z) in self.directions.iter().zip(s) {
            for (vi, di) in v.iter_mut().zip(d) {
                *vi += z * *di;
            }
        }
        v
    }

    /// Euclidean distance from `p` to the component.
    pub fn distance(&self, p: &CVector) -> f64 {
        let dim = self.offset.len();
        let shifted = p - CVector::from_iterator(dim, self.offset.iter().map(|&x| re(x)));
        if self.directions.is_empty() {
            return shifted.norm();
        }
        let a = CMatrix::from_fn(dim, self.directions.len(), |i, k| re(self.directions[k][i]));
        let b = CMatrix::from_column_slice(dim, 1, shifted.as_slice());
        let s = least_squares_solve(&a, &b);
        (a * s - b).norm()
    }
}

/// Known irreducible components of one fibre.
#[derive(Clone, Debug, Serialize)]
pub struct FiberComponentSpec {
    pub word: Word,
    #[serde(with = "crate::io::matrix")]
    pub target: CMatrix,
    pub components: Vec<AffineComponent>,
    pub citation: String,
}

fn component(name: &str, directions: &[&[f64]]) -> AffineComponent {
    let dim = directions[0].len();
    AffineComponent {
        name: name.to_owned(),
        offset: vec![0.0; dim],
        directions: directions.iter().map(|d| d.to_vec()).collect(),
    }
}

/// The fibres over `I` of `1212` (two lines) and `12121` (two planes) in
/// `SL_2`, in coordinates `(a, b, c, d[, e])`.
pub fn documented_fibers_sl2() -> Vec<FiberComponentSpec> {
    let e = catalog_sl2();
    let id = CMatrix::identity(2, 2);
    vec![
        FiberComponentSpec {
            word: e.word("1212").expect("letters exist"),
            target: id.clone(),
            components: vec![
                component("b = d = a + c = 0", &[&[1.0, 0.0, -1.0, 0.0]]),
                component("c = a = b + d = 0", &[&[0.0, 1.0, 0.0, -1.0]]),
            ],
            citation: "the 1212 fibre over I is the union of two lines".into(),
        },
        FiberComponentSpec {
            word: e.word("12121").expect("letters exist"),
            target: id,
            components: vec![
                component(
                    "c = b + d = a + e = 0",
                    &[&[1.0, 0.0, 0.0, 0.0, -1.0], &[0.0, 1.0, 0.0, -1.0, 0.0]],
                ),
                component(
                    "d = b = a + c + e = 0",
                    &[&[1.0, 0.0, 0.0, 0.0, -1.0], &[0.0, 0.0, 1.0, 0.0, -1.0]],
                ),
            ],
            citation: "the 12121 fibre over I has two components of dimension 2".into(),
        },
    ]
}

/// Documented spec for `(w, target)` if any.
pub fn find_spec<'a>(
    specs: &'a [FiberComponentSpec],
    w: &Word,
    target: &CMatrix,
) -> Option<&'a FiberComponentSpec> {
    specs
        .iter()
        .find(|s| &s.word == w && s.target.shape() == target.shape() && (&s.target - target).norm() < 1e-9)
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentCheck {
    pub name: String,
    pub samples: usize,
    pub max_residual: f64,
    /// Samples of this component that also lie on another component.
    pub intersections: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecReport {
    pub word: Word,
    pub components: Vec<ComponentCheck>,
    pub max_residual: f64,
    /// Every component has a sample off every other component.
    pub distinct: bool,
    pub failures: Vec<String>,
}

impl SpecReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Evaluates every component at `samples_per_component` random dyadic points
/// (exact in floating point) plus the origin of its free variables, checks
/// `mu_w = target` to `1e-12`, and checks the components are distinct.
pub fn verify_component_spec(
    entry: &CatalogEntry,
    spec: &FiberComponentSpec,
    samples_per_component: usize,
    seed: u64,
) -> Result<SpecReport> {
    let mut r = rng(derive_seed(seed, "verify-components"));
    let mut report = SpecReport {
        word: spec.word.clone(),
        components: Vec::new(),
        max_residual: 0.0,
        distinct: true,
        failures: Vec::new(),
    };
    for (i, comp) in spec.components.iter().enumerate() {
        let mut check = ComponentCheck {
            name: comp.name.clone(),
            samples: 0,
            max_residual: 0.0,
            intersections: 0,
        };
        let mut off_others = vec![false; spec.components.len()];
        for k in 0..=samples_per_component {
            let s: Vec<C64> = (0..comp.free_vars())
                .map(|_| if k == 0 { re(0.0) } else { re(f64::from(r.random_range(-40..=40)) / 4.0) })
                .collect();
            let flat = comp.point(&s);
            let p = ParamPoint::from_flat(entry, &spec.word, &flat)?;
            let res = (evaluate(entry, &spec.word, &p)? - &spec.target).norm();
            check.samples += 1;
            check.max_residual = check.max_residual.max(res);
            if res > 1e-12 {
                report.failures.push(format!("{}: residual {res:.3e} at {s:?}", comp.name));
            }
            let mut shared = false;
            for (j, other) in spec.components.iter().enumerate() {
                if j == i {
                    continue;
                }
                if other.distance(&flat) < CLASSIFY_THRESHOLD {
                    shared = true;
                } else {
                    off_others[j] = true;
                }
            }
            if shared {
                check.intersections += 1;
            }
        }
        for (j, off) in off_others.iter().enumerate() {
            if j != i && !off {
                report.distinct = false;
                report.failures.push(format!(
                    "{}: no sample leaves component {}",
                    comp.name, spec.components[j].name
                ));
            }
        }
        report.max_residual = report.max_residual.max(check.max_residual);
        report.components.push(check);
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberSolution {
    pub params: ParamPoint,
    pub residual: f64,
    /// `dim X_w - rank d mu_w` at the solution.
    pub nullity: usize,
    /// Index into the documented components, `None` when unclassified or no
    /// spec is known.
    pub component: Option<usize>,
    /// Distance to the nearest documented component.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component_distance: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberSampleReport {
    pub word: Word,
    #[serde(with = "crate::io::matrix")]
    pub target: CMatrix,
    pub starts: usize,
    /// Starts whose Gauss-Newton run reached `newton_tol`.
    pub converged: usize,
    pub solutions: Vec<FiberSolution>,
    /// Names of the documented components used for classification.
    pub component_names: Vec<String>,
}

impl FiberSampleReport {
    pub fn unclassified(&self) -> usize {
        self.solutions.iter().filter(|s| s.component.is_none()).count()
    }
}

/// Gauss-Newton from `starts` seeded random points on
/// `F(p) = mu_w(p) - target`; keeps runs with residual below `newton_tol`,
/// deduplicates, and classifies against `spec` when given.
pub fn newton_fiber_sample(
    entry: &CatalogEntry,
    w: &Word,
    target: &CMatrix,
    starts: usize,
    seed: u64,
    tol: &Tolerances,
    spec: Option<&FiberComponentSpec>,
) -> Result<FiberSampleReport> {
    let n = entry.group.ambient_size;
    if target.shape() != (n, n) {
        return Err(Error::Shape(format!("target must be {n}x{n}")));
    }
    let total = entry.param_dim(w)?;
    let residual = |v: &CVector| {
        let p = ParamPoint::from_flat(entry, w, v).ok()?;
        Some(vec_row_major(&(evaluate(entry, w, &p).ok()? - target)))
    };
    let jac = |v: &CVector| {
        let p = ParamPoint::from_flat(entry, w, v).ok()?;
        jacobian(entry, w, &p).ok()
    };

    let mut report = FiberSampleReport {
        word: w.clone(),
        target: target.clone(),
        starts,
        converged: 0,
        solutions: Vec::new(),
        component_names: spec.map(|s| s.components.iter().map(|c| c.name.clone()).collect()).unwrap_or_default(),
    };
    for k in 0..starts {
        let mut r = rng(derive_seed(seed, &format!("fiber-start-{k}")));
        let x0 = ParamPoint::random(entry, w, &mut r)?.flatten();
        let out = gauss_newton(x0, residual, jac, tol.newton_tol, tol);
        if !out.converged {
            continue;
        }
        report.converged += 1;
        if report.solutions.iter().any(|s| (s.params.flatten() - &out.x).norm() < DEDUP_THRESHOLD) {
            continue;
        }
        let params = ParamPoint::from_flat(entry, w, &out.x)?;
        let j = jacobian(entry, w, &params)?;
        let nullity = total - numerical_rank(&j, tol);
        let (component, component_distance) = match spec {
            Some(spec) => {
                let (best, dist) = spec
                    .components
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (i, c.distance(&out.x)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("spec has components");
                ((dist < CLASSIFY_THRESHOLD).then_some(best), Some(dist))
            }
            None => (None, None),
        };
        report.solutions.push(FiberSolution {
            params,
            residual: out.residual,
            nullity,
            component,
            component_distance,
        });
    }
    Ok(report)
}

/// Exponent matrix of a word of monomial letters: entry `(i, j)` is the
/// exponent of parameter `j` in diagonal coordinate `i`.
pub fn torus_exponent_matrix(entry: &CatalogEntry, w: &Word) -> Result<IntMatrix> {
    let n = entry.group.ambient_size;
    let mut rows: Vec<Vec<i64>> = vec![Vec::new(); n];
    for id in w.letters() {
        let Chart::Monomial { exponents } = &entry.letter(id)?.chart else {
            return Err(Error::NotMonomial(w.to_string()));
        };
        for (row, e) in rows.iter_mut().zip(exponents) {
            row.extend(e.iter().map(|&x| i64::from(x)));
        }
    }
    if rows[0].is_empty() {
        return Err(Error::NotMonomial(w.to_string()));
    }
    IntMatrix::from_rows(&rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorusComponents {
    /// Number of irreducible components of the kernel.
    pub count: BigInt,
    pub invariant_factors: Vec<BigInt>,
}

/// Components of the kernel of the monomial map with exponent matrix `m`:
/// the order of the torsion of `Z^n / rowspace`, i.e. the product of the
/// invariant factors. Rejects matrices whose rows are dependent.
pub fn torus_component_count(m: &IntMatrix) -> Result<TorusComponents> {
    let factors = smith_normal_form(m);
    if factors.len() < m.nrows() {
        return Err(Error::RankDeficient { rank: factors.len(), rows: m.nrows() });
    }
    let count = factors.iter().fold(BigInt::one(), |acc, d| acc * d);
    Ok(TorusComponents { count, invariant_factors: factors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::catalog_torus2;
    use crate::numeric::real_matrix;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn documented_points() {
        let e = catalog_sl2();
        let specs = documented_fibers_sl2();
        let at = |spec: &FiberComponentSpec, c: usize, s: &[f64]| {
            let s: Vec<C64> = s.iter().map(|&x| re(x)).collect();
            let flat = spec.components[c].point(&s);
            (flat.iter().map(|z| z.re).collect::<Vec<_>>(), evaluate(&e, &spec.word, &ParamPoint::from_flat(&e, &spec.word, &flat).unwrap()).unwrap())
        };
        let (p, g) = at(&specs[0], 0, &[5.0]);
        assert_eq!(p, vec![5.0, 0.0, -5.0, 0.0]);
        assert_eq!(g, CMatrix::identity(2, 2));
        let (p, _) = at(&specs[0], 1, &[7.0]);
        assert_eq!(p, vec![0.0, 7.0, 0.0, -7.0]);
        let (p, g) = at(&specs[1], 0, &[2.0, 3.0]);
        assert_eq!(p, vec![2.0, 3.0, 0.0, -3.0, -2.0]);
        assert_eq!(g, CMatrix::identity(2, 2));
    }

    #[test]
    fn specs_verify() {
        let e = catalog_sl2();
        for spec in documented_fibers_sl2() {
            let rep = verify_component_spec(&e, &spec, 10, 1).unwrap();
            assert!(rep.passed(), "{:?}", rep.failures);
            assert!(rep.distinct);
            assert!(rep.components.iter().all(|c| c.intersections >= 1));
        }
    }

    #[test]
    fn single_preimage_for_121() {
        let e = catalog_sl2();
        let w = e.word("121").unwrap();
        let g = real_matrix(&[&[3.0, 10.0], &[2.0, 7.0]]);
        let rep = newton_fiber_sample(&e, &w, &g, 50, 0, &Tolerances::default(), None).unwrap();
        assert!(rep.converged > 0);
        assert_eq!(rep.solutions.len(), 1);
        let expected = CVector::from_vec(vec![re(1.0), re(2.0), re(3.0)]);
        assert!((rep.solutions[0].params.flatten() - expected).norm() < 1e-9);
        assert_eq!(rep.solutions[0].nullity, 0);
    }

    #[test]
    fn fiber_of_1212_over_identity() {
        let e = catalog_sl2();
        let specs = documented_fibers_sl2();
        let spec = &specs[0];
        let tol = Tolerances::default();
        let rep = newton_fiber_sample(&e, &spec.word, &spec.target, 40, 2, &tol, Some(spec)).unwrap();
        assert!(rep.converged > 0);
        assert_eq!(rep.unclassified(), 0);
        assert!(rep.solutions.iter().all(|s| s.nullity == 1));
    }

    #[test]
    fn torus_examples() {
        let t = catalog_torus2();
        let m = torus_exponent_matrix(&t, &t.word("1212").unwrap()).unwrap();
        assert_eq!(m, IntMatrix::from_rows(&[vec![1, 2, 1, 2], vec![2, 1, 2, 1]]).unwrap());
        let c = torus_component_count(&m).unwrap();
        assert_eq!(c.count, BigInt::from(3));
        assert_eq!(c.invariant_factors, big(&[1, 3]));
        let m = torus_exponent_matrix(&t, &t.word("1").unwrap()).unwrap();
        assert_eq!(m, IntMatrix::from_rows(&[vec![1], vec![2]]).unwrap());
        assert!(matches!(torus_component_count(&m), Err(Error::RankDeficient { rank: 1, rows: 2 })));
        let m = torus_exponent_matrix(&t, &t.word("12").unwrap()).unwrap();
        assert_eq!(torus_component_count(&m).unwrap().count, BigInt::from(3));
        let id = IntMatrix::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(torus_component_count(&id).unwrap().count, BigInt::from(1));
        let e = catalog_sl2();
        assert!(matches!(torus_exponent_matrix(&e, &e.word("12").unwrap()), Err(Error::NotMonomial(_))));
    }
}
