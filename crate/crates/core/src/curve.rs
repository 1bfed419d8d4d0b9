//! Lifting curves of targets `g(t)` through `mu_w` by predictor-corrector
//! path tracking.

use std::sync::Arc;

use serde::Serialize;

use crate::catalog::CatalogEntry;
use crate::error::{Error, Result};
use crate::factor::{one_param_factor_sl2, sl2_121, sl2_1212, Factorization};
use crate::group::{GroupDescriptor, GroupName};
use crate::numeric::{
    gauss_newton, least_squares_solve_rcond, re, singular_values, vec_row_major, CMatrix, CVector,
    Tolerances,
};
use crate::word::{contains_consecutive, evaluate, jacobian, ParamPoint, Word};

pub const MIN_STEP: f64 = 1e-5;
pub const MAX_STEP: f64 = 0.1;
/// Parameter norm beyond which a path is considered to have left every
/// compact set (hit the excluded locus).
pub const DIVERGENCE_NORM: f64 = 1e8;
const DERIVATIVE_STEP: f64 = 1e-6;
const CORRECTOR_ITERS: usize = 8;

/// A curve `t -> g(t)` in `G` over `t in [0, 1]`.
#[derive(Clone)]
pub struct TargetCurve {
    pub description: String,
    pub group: GroupDescriptor,
    eval: Arc<dyn Fn(f64) -> CMatrix + Send + Sync>,
}

impl std::fmt::Debug for TargetCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TargetCurve")
            .field("description", &self.description)
            .field("group", &self.group)
            .finish()
    }
}

impl TargetCurve {
    pub fn new(
        description: impl Into<String>,
        group: GroupDescriptor,
        eval: impl Fn(f64) -> CMatrix + Send + Sync + 'static,
    ) -> Self {
        Self { description: description.into(), group, eval: Arc::new(eval) }
    }

    pub fn at(&self, t: f64) -> CMatrix {
        (self.eval)(t)
    }

    /// Central difference, one-sided within `[0, 1]` at the ends.
    pub fn derivative(&self, t: f64) -> CMatrix {
        let lo = (t - DERIVATIVE_STEP).max(0.0);
        let hi = (t + DERIVATIVE_STEP).min(1.0);
        (self.at(hi) - self.at(lo)) / re(hi - lo)
    }

    pub fn constant(g: CMatrix, group: GroupDescriptor) -> Self {
        Self::new("constant", group, move |_| g.clone())
    }

    /// Piecewise-linear interpolation of `(t, g)` samples covering `[0, 1]`,
    /// projected back onto the group at every evaluation.
    pub fn sampled(
        samples: Vec<(f64, CMatrix)>,
        group: GroupDescriptor,
        tol: &Tolerances,
    ) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Input("a sampled curve needs at least two samples".into()));
        }
        let (t0, t1) = (samples[0].0, samples[samples.len() - 1].0);
        if t0 > 0.0 || t1 < 1.0 {
            return Err(Error::Input(format!("samples cover [{t0}, {t1}], not [0, 1]")));
        }
        if samples.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Input("sample times must be distinct".into()));
        }
        let n = group.ambient_size;
        for (t, m) in &samples {
            if m.shape() != (n, n) {
                return Err(Error::Shape(format!("sample at t = {t} is not {n}x{n}")));
            }
            group.project(m, tol)?;
        }
        let tol = *tol;
        Ok(Self::new("sampled", group, move |t| {
            let k = samples.partition_point(|(s, _)| *s <= t).clamp(1, samples.len() - 1);
            let (ta, a) = &samples[k - 1];
            let (tb, b) = &samples[k];
            let lambda = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
            let m = a * re(1.0 - lambda) + b * re(lambda);
            group.project(&m, &tol).unwrap_or(m)
        }))
    }
}

/// `x1(t) x2(t) = [[1 + t^2, t], [t, 1]]`.
pub fn shear_path() -> TargetCurve {
    TargetCurve::new("shear-path", GroupDescriptor::sl2(), |t| {
        crate::numeric::real_matrix(&[&[1.0 + t * t, t], &[t, 1.0]])
    })
}

/// `diag(2, 1/2) x2(2 - 4t)`, whose `g21 = 1 - 2t` vanishes at `t = 1/2`
/// where `g11 = 2`: the curve crosses the part of `g21 = 0` that `121`
/// does not reach.
pub fn cross_locus() -> TargetCurve {
    TargetCurve::new("cross-locus", GroupDescriptor::sl2(), |t| {
        crate::numeric::real_matrix(&[&[2.0, 0.0], &[1.0 - 2.0 * t, 0.5]])
    })
}

/// Where [`cross_locus`] meets `g21 = 0`.
pub const CROSS_LOCUS_T: f64 = 0.5;

pub fn constant_sl2() -> TargetCurve {
    let g = crate::numeric::real_matrix(&[&[3.0, 10.0], &[2.0, 7.0]]);
    TargetCurve::new("constant", GroupDescriptor::sl2(), move |_| g.clone())
}

pub fn builtin_curve(name: &str) -> Result<TargetCurve> {
    match name {
        "shear-path" => Ok(shear_path()),
        "cross-locus" => Ok(cross_locus()),
        "constant" => Ok(constant_sl2()),
        _ => Err(Error::Input(format!(
            "unknown builtin curve `{name}` (expected shear-path, cross-locus or constant)"
        ))),
    }
}

/// A factorisation of `g` along `w` in `SL_2`, from a closed-form solver for
/// a consecutive subword (`1212`, `121` or `2312`) with unit parameters
/// elsewhere.
pub fn sl2_start(entry: &CatalogEntry, w: &Word, g: &CMatrix, seed: u64, tol: &Tolerances) -> Result<ParamPoint> {
    if entry.group.name != GroupName::Sl2 {
        return Err(Error::Unsupported(format!("automatic start point for {}", entry.group)));
    }
    type Solver = fn(&CMatrix, u64, &Tolerances) -> Result<Factorization>;
    let solvers: [(&str, Solver); 3] = [
        ("1212", |g, _, tol| sl2_1212(g, tol)),
        ("121", |g, _, tol| sl2_121(g, tol)),
        ("2312", one_param_factor_sl2),
    ];
    let mut last = Error::Unsupported(format!("no solvable subword in {w}"));
    for (sub, solve) in solvers {
        let u = entry.word(sub)?;
        if !contains_consecutive(w, &u) {
            continue;
        }
        let pos = (0..=w.len() - u.len())
            .find(|&s| w.letters()[s..s + u.len()] == *u.letters())
            .expect("contained");
        match solve(g, seed, tol) {
            Ok(f) => {
                let mut blocks = ParamPoint::unit(entry, w)?.blocks;
                for (k, b) in f.params.blocks.into_iter().enumerate() {
                    blocks[pos + k] = b;
                }
                return Ok(ParamPoint::new(blocks));
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftNode {
    pub t: f64,
    pub params: ParamPoint,
    pub residual: f64,
}

/// A tracked lift `t -> p(t)` with `mu_w(p(t)) = g(t)` at the grid nodes.
#[derive(Clone, Debug, Serialize)]
pub struct PathLift {
    pub word: Word,
    pub curve: String,
    pub nodes: Vec<LiftNode>,
    pub max_residual: f64,
    /// Largest `|dp/dt|` seen while tracking.
    pub max_tangent_norm: f64,
    /// Grid times where consecutive nodes are further apart than
    /// `10 * dt * max_tangent_norm`.
    pub suspected_jumps: Vec<f64>,
    /// Accepted predictor-corrector steps, including refinements.
    pub substeps: usize,
}

struct Tracker<'a> {
    entry: &'a CatalogEntry,
    w: &'a Word,
    tol: Tolerances,
}

impl Tracker<'_> {
    fn point(&self, x: &CVector) -> Option<ParamPoint> {
        ParamPoint::from_flat(self.entry, self.w, x).ok()
    }

    fn jacobian(&self, x: &CVector) -> Option<CMatrix> {
        jacobian(self.entry, self.w, &self.point(x)?).ok()
    }

    fn residual_vec(&self, x: &CVector, g: &CMatrix) -> Option<CVector> {
        Some(vec_row_major(&(evaluate(self.entry, self.w, &self.point(x)?).ok()? - g)))
    }

    /// Minimum-norm solution of `J v = dg/dt`.
    fn velocity(&self, x: &CVector, curve: &TargetCurve, t: f64) -> Option<CVector> {
        let j = self.jacobian(x)?;
        let dg = vec_row_major(&curve.derivative(t));
        let rhs = CMatrix::from_column_slice(dg.len(), 1, dg.as_slice());
        let v = least_squares_solve_rcond(&j, &rhs, self.tol.rank_tol);
        let v = CVector::from_column_slice(v.as_slice());
        v.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(v)
    }

    fn rk4(&self, x: &CVector, curve: &TargetCurve, t: f64, h: f64) -> Option<CVector> {
        let hh = re(h);
        let half = re(h / 2.0);
        let k1 = self.velocity(x, curve, t)?;
        let k2 = self.velocity(&(x + &k1 * half), curve, t + h / 2.0)?;
        let k3 = self.velocity(&(x + &k2 * half), curve, t + h / 2.0)?;
        let k4 = self.velocity(&(x + &k3 * hh), curve, t + h)?;
        Some(x + (k1 + k2 * re(2.0) + k3 * re(2.0) + k4) * re(h / 6.0))
    }

    fn corrector_target(&self) -> f64 {
        self.tol.newton_tol.max(self.tol.residual_tol * 1e-2)
    }

    /// Gauss-Newton onto the fibre over `g`; `(point, residual, iterations)`.
    fn correct(&self, x: CVector, g: &CMatrix, iters: usize) -> (CVector, f64, usize) {
        let tol = Tolerances { max_newton_iters: iters, ..self.tol };
        let out = gauss_newton(
            x,
            |v| self.residual_vec(v, g),
            |v| self.jacobian(v),
            self.corrector_target(),
            &tol,
        );
        (out.x, out.residual, out.iterations)
    }
}

/// Tracks `p(t)` from `start` over the grid `t_k = k / steps`, refining
/// adaptively: the step halves when the corrector needs more than 5
/// iterations or fails and doubles when it needs at most 2, within
/// `[MIN_STEP, min(MAX_STEP, 1/steps)]`. The predictor is RK4 on the
/// minimum-norm tangent `dp/dt = J^+ dg/dt`, the corrector Gauss-Newton.
pub fn lift_curve(
    entry: &CatalogEntry,
    w: &Word,
    curve: &TargetCurve,
    start: &ParamPoint,
    steps: usize,
    tol: &Tolerances,
) -> Result<PathLift> {
    if steps < 2 {
        return Err(Error::Input("lifting needs at least 2 steps".into()));
    }
    let g0 = curve.at(0.0);
    let r0 = (evaluate(entry, w, start)? - &g0).norm();
    if !(r0 < tol.residual_tol) {
        return Err(Error::StartMismatch { residual: r0 });
    }
    let tracker = Tracker { entry, w, tol: *tol };
    let h_max = MAX_STEP.min(1.0 / steps as f64);
    let mut h = h_max;
    let mut x = start.flatten();
    let mut t = 0.0;
    let mut lift = PathLift {
        word: w.clone(),
        curve: curve.description.clone(),
        nodes: vec![LiftNode { t: 0.0, params: start.clone(), residual: r0 }],
        max_residual: r0,
        max_tangent_norm: tracker.velocity(&x, curve, 0.0).map_or(0.0, |v| v.norm()),
        suspected_jumps: Vec::new(),
        substeps: 0,
    };

    let mut last_res = r0;
    for k in 1..=steps {
        let t_node = k as f64 / steps as f64;
        while t_node - t > 1e-14 {
            let remaining = t_node - t;
            let t_next = if h >= remaining - 1e-14 { t_node } else { t + h };
            let dt = t_next - t;
            let g_next = curve.at(t_next);
            let accepted = tracker.rk4(&x, curve, t, dt).and_then(|pred| {
                let (xc, res, iters) = tracker.correct(pred.clone(), &g_next, CORRECTOR_ITERS);
                let moved = (&pred - &x).norm();
                let corrected = (&xc - &pred).norm();
                let ok = res < 0.5 * tol.residual_tol
                    && corrected <= 0.5 * moved + 1e-10 * (1.0 + x.norm());
                ok.then_some((xc, res, iters))
            });
            match accepted {
                Some((xc, res, iters)) => {
                    x = xc;
                    t = t_next;
                    lift.substeps += 1;
                    if x.norm() > DIVERGENCE_NORM {
                        return Err(Error::TrackingFailure { t });
                    }
                    if let Some(v) = tracker.velocity(&x, curve, t) {
                        lift.max_tangent_norm = lift.max_tangent_norm.max(v.norm());
                    }
                    if iters > 5 {
                        h = (h / 2.0).max(MIN_STEP);
                    } else if iters <= 2 {
                        h = (h * 2.0).min(h_max);
                    }
                    last_res = res;
                }
                None => {
                    if h <= MIN_STEP {
                        return Err(Error::TrackingFailure { t });
                    }
                    h = (h / 2.0).max(MIN_STEP);
                }
            }
        }
        t = t_node;
        lift.max_residual = lift.max_residual.max(last_res);
        lift.nodes.push(LiftNode { t, params: ParamPoint::from_flat(entry, w, &x)?, residual: last_res });
    }

    let bound = 10.0 * lift.max_tangent_norm;
    for pair in lift.nodes.windows(2) {
        let d = pair[0].params.distance(&pair[1].params);
        if d > bound * (pair[1].t - pair[0].t) + 1e-12 {
            lift.suspected_jumps.push(pair[1].t);
        }
    }
    Ok(lift)
}

/// Ratio `sigma_{dim G} / sigma_1` below which a fibre point counts as
/// critical (the fibre may be singular there).
pub const CRITICAL_RATIO: f64 = 1e-6;
const FIBER_MAX_STEPS: usize = 5000;

#[derive(Clone, Debug, Serialize)]
pub struct Connection {
    pub lift: PathLift,
    /// The tracked endpoint was joined to the requested endpoint inside the
    /// fibre over `g(1)` without passing a critical point.
    pub connected: bool,
    pub end_distance: f64,
    pub fiber_steps: usize,
    /// Smallest `sigma_{dim G} / sigma_1` seen on the fibre path.
    pub min_rank_ratio: f64,
    pub reason: String,
}

/// [`lift_curve`] followed by a walk inside the fibre over `g(1)` from the
/// tracked endpoint to `end`.
///
/// The walk moves along the projection of `end - x` onto `ker d mu_w(x)`
/// and corrects back to the fibre by Gauss-Newton. It is reported as failed
/// (not as an error) when it stalls, when the correction is not small
/// relative to the step, or when it meets a point where `d mu_w` loses rank.
/// Failure on an irreducible word is inconclusive.
pub fn lift_between(
    entry: &CatalogEntry,
    w: &Word,
    curve: &TargetCurve,
    start: &ParamPoint,
    end: &ParamPoint,
    steps: usize,
    tol: &Tolerances,
) -> Result<Connection> {
    let g1 = curve.at(1.0);
    let r1 = (evaluate(entry, w, end)? - &g1).norm();
    if !(r1 < tol.residual_tol) {
        return Err(Error::StartMismatch { residual: r1 });
    }
    let lift = lift_curve(entry, w, curve, start, steps, tol)?;
    let tracker = Tracker { entry, w, tol: *tol };
    let target = end.flatten();
    let mut x = lift.nodes.last().expect("nodes").params.flatten();
    let dim = entry.group.dim;
    let close = 1e-9 * (1.0 + target.norm());
    let mut h = 0.05 * (1.0 + target.norm());
    let h_min = 1e-9 * (1.0 + target.norm());
    let mut min_ratio = f64::INFINITY;

    let outcome = |lift: PathLift, x: &CVector, steps, ratio, ok: bool, reason: &str| Connection {
        lift,
        connected: ok,
        end_distance: (x - &target).norm(),
        fiber_steps: steps,
        min_rank_ratio: ratio,
        reason: reason.to_owned(),
    };

    for step in 0..FIBER_MAX_STEPS {
        let gap = &target - &x;
        let dist = gap.norm();
        if dist <= close {
            return Ok(outcome(lift, &x, step, min_ratio, true, "reached the end point"));
        }
        let Some(j) = tracker.jacobian(&x) else {
            return Ok(outcome(lift, &x, step, min_ratio, false, "left the parameter domain"));
        };
        let sv = singular_values(&j);
        let ratio = if sv.len() >= dim && sv[0] > 0.0 { sv[dim - 1] / sv[0] } else { 0.0 };
        min_ratio = min_ratio.min(ratio);
        if ratio < CRITICAL_RATIO {
            return Ok(outcome(lift, &x, step, min_ratio, false, "met a critical point of the fibre"));
        }
        let jg = &j * &gap;
        let normal = least_squares_solve_rcond(&j, &CMatrix::from_column_slice(jg.len(), 1, jg.as_slice()), tol.rank_tol);
        let along = &gap - CVector::from_column_slice(normal.as_slice());
        let reach = along.norm();
        if reach < 1e-3 * dist {
            return Ok(outcome(lift, &x, step, min_ratio, false, "stalled: the end point is normal to the fibre"));
        }
        loop {
            let len = h.min(reach);
            let y = &x + &along * re(len / reach);
            let (xc, res, _) = tracker.correct(y.clone(), &g1, CORRECTOR_ITERS);
            let ok = res < 0.5 * tol.residual_tol
                && (&xc - &y).norm() <= 0.25 * len + close
                && (&target - &xc).norm() < dist;
            if ok {
                x = xc;
                if len >= h {
                    h *= 1.5;
                }
                break;
            }
            h /= 2.0;
            if h < h_min {
                return Ok(outcome(lift, &x, step, min_ratio, false, "step size underflow inside the fibre"));
            }
        }
    }
    Ok(outcome(lift, &x, FIBER_MAX_STEPS, min_ratio, false, "step budget exhausted"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::catalog_sl2;
    use crate::numeric::real_matrix;

    #[test]
    fn shear_path_tracks() {
        let e = catalog_sl2();
        let w = e.word("1212").unwrap();
        let start = ParamPoint::unit(&e, &w).unwrap();
        let tol = Tolerances::default();
        let lift = lift_curve(&e, &w, &shear_path(), &start, 100, &tol).unwrap();
        assert_eq!(lift.nodes.len(), 101);
        assert!(lift.max_residual < 1e-8);
        assert!(lift.suspected_jumps.is_empty());
    }

    #[test]
    fn constant_curve_gives_constant_lift() {
        let e = catalog_sl2();
        let w = e.word("1212").unwrap();
        let tol = Tolerances::default();
        let curve = constant_sl2();
        let start = sl2_1212(&curve.at(0.0), &tol).unwrap().params;
        let lift = lift_curve(&e, &w, &curve, &start, 10, &tol).unwrap();
        assert!(lift.nodes.iter().all(|n| n.params.distance(&start) < 1e-12));
    }

    #[test]
    fn cross_locus_fails_near_crossing() {
        let e = catalog_sl2();
        let w = e.word("121").unwrap();
        let tol = Tolerances::default();
        let curve = cross_locus();
        let start = sl2_121(&curve.at(0.0), &tol).unwrap().params;
        match lift_curve(&e, &w, &curve, &start, 100, &tol) {
            Err(Error::TrackingFailure { t }) => assert!((t - CROSS_LOCUS_T).abs() < 0.05, "t = {t}"),
            other => panic!("expected a tracking failure, got {other:?}"),
        }
    }

    #[test]
    fn start_mismatch_rejected() {
        let e = catalog_sl2();
        let w = e.word("1212").unwrap();
        let start = ParamPoint::unit(&e, &w).unwrap();
        let err = lift_curve(&e, &w, &constant_sl2(), &start, 10, &Tolerances::default()).unwrap_err();
        assert!(matches!(err, Error::StartMismatch { .. }));
    }

    #[test]
    fn sampled_curve_interpolates() {
        let tol = Tolerances::default();
        let a = CMatrix::identity(2, 2);
        let b = real_matrix(&[&[1.0, 2.0], &[0.0, 1.0]]);
        let c = TargetCurve::sampled(vec![(0.0, a), (1.0, b)], GroupDescriptor::sl2(), &tol).unwrap();
        let mid = c.at(0.5);
        assert!((mid[(0, 1)] - re(1.0)).norm() < 1e-12);
        assert!(GroupDescriptor::sl2().contains(&mid, &tol));
    }

    #[test]
    fn start_points_from_subwords() {
        let e = catalog_sl2();
        let tol = Tolerances::default();
        let g = real_matrix(&[&[1.0, 1.0], &[0.0, 1.0]]);
        for s in ["1212", "121212", "31212", "2312"] {
            let w = e.word(s).unwrap();
            let p = sl2_start(&e, &w, &g, 0, &tol).unwrap();
            assert!((evaluate(&e, &w, &p).unwrap() - &g).norm() < 1e-9, "{s}");
        }
    }

    #[test]
    fn step_doubling_is_stable() {
        let e = catalog_sl2();
        let w = e.word("1212").unwrap();
        let tol = Tolerances::default();
        let start = sl2_start(&e, &w, &shear_path().at(0.0), 0, &tol).unwrap();
        let a = lift_curve(&e, &w, &shear_path(), &start, 100, &tol).unwrap();
        let b = lift_curve(&e, &w, &shear_path(), &start, 200, &tol).unwrap();
        let drift = (0..=100)
            .map(|k| a.nodes[k].params.distance(&b.nodes[2 * k].params))
            .fold(0.0, f64::max);
        assert!(drift < 1e-4, "drift {drift}");
    }

    #[test]
    fn reducible_fibre_does_not_connect() {
        let e = catalog_sl2();
        let w = e.word("1212").unwrap();
        let tol = Tolerances::default();
        let curve = TargetCurve::constant(CMatrix::identity(2, 2), GroupDescriptor::sl2());
        let s = re(1.0);
        let start = ParamPoint::new(vec![vec![s], vec![re(0.0)], vec![-s], vec![re(0.0)]]);
        let end = ParamPoint::new(vec![vec![re(0.0)], vec![s], vec![re(0.0)], vec![-s]]);
        let c = lift_between(&e, &w, &curve, &start, &end, 10, &tol).unwrap();
        assert!(!c.connected, "{c:?}");
    }

    #[test]
    fn irreducible_fibre_connects() {
        let e = catalog_sl2();
        let w = e.word("121212").unwrap();
        let tol = Tolerances::default();
        let x1 = |a: f64| real_matrix(&[&[1.0, a], &[0.0, 1.0]]);
        let curve = TargetCurve::new("x1(t)", GroupDescriptor::sl2(), x1);
        let mut rng = crate::random::rng(7);
        let mut ok = 0;
        for _ in 0..10 {
            let plant = |rng: &mut _, g: &CMatrix| {
                let head = e.word("121").unwrap();
                let p = ParamPoint::random(&e, &head, rng).unwrap();
                let h = evaluate(&e, &head, &p).unwrap();
                let inv = h.clone().try_inverse().unwrap() * g;
                let ee = inv[(0, 1)];
                let (dd, ff) = ((inv[(1, 1)] - re(1.0)) / ee, (inv[(0, 0)] - re(1.0)) / ee);
                p.concat(&ParamPoint::new(vec![vec![dd], vec![ee], vec![ff]]))
            };
            let start = plant(&mut rng, &CMatrix::identity(2, 2));
            let end = plant(&mut rng, &x1(1.0));
            let c = lift_between(&e, &w, &curve, &start, &end, 20, &tol).unwrap();
            if c.connected {
                ok += 1;
            } else {
                eprintln!("{} {} {}", c.reason, c.end_distance, c.fiber_steps);
            }
        }
        assert!(ok >= 9, "{ok}/10");
    }
}
