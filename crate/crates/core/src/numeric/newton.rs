use super::{least_squares_solve_rcond, CMatrix, CVector, Tolerances};

/// Result of a Gauss-Newton run.
#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub x: CVector,
    /// Euclidean norm of the residual at `x`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_HALVINGS: usize = 30;

/// Damped Gauss-Newton for an underdetermined or square complex system
/// `F(x) = 0`.
///
/// Each step is the minimum-norm least-squares solution of `J dx = -F`
/// (singular values below `tol.rank_tol * sigma_max` dropped), shortened by
/// halving until the residual decreases. `residual` and `jacobian` return
/// `None` outside the domain, which the line search treats as a rejected step.
/// Stops once the residual is at most `target`, after `tol.max_newton_iters`
/// iterations, or when no halving decreases the residual.
pub fn gauss_newton<F, J>(
    x0: CVector,
    residual: F,
    jacobian: J,
    target: f64,
    tol: &Tolerances,
) -> NewtonOutcome
where
    F: Fn(&CVector) -> Option<CVector>,
    J: Fn(&CVector) -> Option<CMatrix>,
{
    let mut x = x0;
    let Some(mut fx) = residual(&x) else {
        return NewtonOutcome { x, residual: f64::INFINITY, iterations: 0, converged: false };
    };
    let mut norm = fx.norm();
    let mut iterations = 0;

    while norm > target && iterations < tol.max_newton_iters {
        iterations += 1;
        let Some(jac) = jacobian(&x) else { break };
        let rhs = CMatrix::from_iterator(fx.len(), 1, fx.iter().map(|z| -z));
        let step = least_squares_solve_rcond(&jac, &rhs, tol.rank_tol);
        let step = CVector::from_iterator(step.nrows(), step.iter().copied());

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = &x + &step * super::re(lambda);
            if let Some(ft) = residual(&trial) {
                let n = ft.norm();
                if n.is_finite() && n < norm {
                    accepted = Some((trial, ft, n));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((xt, ft, n)) => {
                x = xt;
                fx = ft;
                norm = n;
            }
            None => break,
        }
    }

    NewtonOutcome { converged: norm <= target, x, residual: norm, iterations }
}
