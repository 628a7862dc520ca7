//! Linear solvers for the SPD precision systems C u = rhs.

use crate::error::{Error, Result};
use crate::model::BayesSiacModel;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// How to solve the u-subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// Dense Cholesky factorization; O(N³), fine for small N.
    DirectSpd,
    /// Matrix-free conjugate gradients; preferred for large N.
    ConjugateGradient,
}

impl SolverKind {
    /// Direct factorization up to N = 2000, conjugate gradients above.
    pub fn for_problem_size(n: usize) -> Self {
        if n <= 2000 {
            SolverKind::DirectSpd
        } else {
            SolverKind::ConjugateGradient
        }
    }
}

pub(crate) fn cholesky_spd(c: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(c).ok_or_else(|| {
        Error::Solver("Cholesky factorization failed: precision matrix is not SPD".into())
    })
}

/// Conjugate gradients for an SPD operator given as a closure.
///
/// Stops when ‖rhs - C x‖ ≤ rel_tol · ‖rhs‖; errors out after `max_iter`
/// iterations, reporting the residual reached.
pub fn conjugate_gradient<F>(
    apply: F,
    rhs: &DVector<f64>,
    x0: Option<&DVector<f64>>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 {
        return Ok(DVector::zeros(rhs.len()));
    }
    let mut x = match x0 {
        Some(v) => v.clone(),
        None => DVector::zeros(rhs.len()),
    };
    let mut r = rhs - apply(&x)?;
    let mut p = r.clone();
    let mut rs = r.norm_squared();
    let target = rel_tol * rhs_norm;
    if rs.sqrt() <= target {
        return Ok(x);
    }
    for _ in 0..max_iter {
        let cp = apply(&p)?;
        let denom = p.dot(&cp);
        if denom <= 0.0 {
            return Err(Error::Solver(format!(
                "conjugate gradients hit a non-positive curvature direction ({denom:.3e}); \
                 operator is not SPD"
            )));
        }
        let step = rs / denom;
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &cp, 1.0);
        let rs_new = r.norm_squared();
        if rs_new.sqrt() <= target {
            return Ok(x);
        }
        p = &r + (rs_new / rs) * p;
        rs = rs_new;
    }
    Err(Error::Solver(format!(
        "conjugate gradients did not reach a relative residual of {rel_tol:.1e} \
         within {max_iter} iterations (reached {:.3e})",
        rs.sqrt() / rhs_norm
    )))
}

/// Solve C(α, β) u = rhs for the model's precision operator.
pub fn solve_precision(
    model: &BayesSiacModel,
    alpha: f64,
    beta: f64,
    rhs: &DVector<f64>,
    solver: SolverKind,
    warm_start: Option<&DVector<f64>>,
    cg_tol: f64,
) -> Result<DVector<f64>> {
    match solver {
        SolverKind::DirectSpd => {
            let chol = cholesky_spd(model.dense_precision(alpha, beta))?;
            Ok(chol.solve(rhs))
        }
        SolverKind::ConjugateGradient => {
            let n = model.dims().1;
            conjugate_gradient(
                |v| model.apply_precision(alpha, beta, v),
                rhs,
                warm_start,
                cg_tol,
                10 * n,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut spd = &m * m.transpose();
        for i in 0..n {
            spd[(i, i)] += n as f64;
        }
        spd
    }

    #[test]
    fn cg_matches_direct_solve() {
        let n = 12;
        let c = random_spd(n, 5);
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let rhs = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let direct = cholesky_spd(c.clone()).unwrap().solve(&rhs);
        let cg = conjugate_gradient(|v| Ok(&c * v), &rhs, None, 1e-12, 10 * n).unwrap();
        for i in 0..n {
            assert_abs_diff_eq!(direct[i], cg[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn cg_zero_rhs_returns_zero() {
        let c = random_spd(4, 1);
        let x = conjugate_gradient(|v| Ok(&c * v), &DVector::zeros(4), None, 1e-10, 40).unwrap();
        assert_eq!(x, DVector::zeros(4));
    }

    #[test]
    fn cg_reports_non_convergence() {
        let c = random_spd(8, 2);
        let rhs = DVector::from_element(8, 1.0);
        let result = conjugate_gradient(|v| Ok(&c * v), &rhs, None, 1e-14, 1);
        assert!(matches!(result, Err(Error::Solver(_))));
    }

    #[test]
    fn warm_start_converges_immediately() {
        let c = random_spd(10, 3);
        let rhs = DVector::from_element(10, 2.0);
        let exact = cholesky_spd(c.clone()).unwrap().solve(&rhs);
        let x = conjugate_gradient(|v| Ok(&c * v), &rhs, Some(&exact), 1e-10, 1).unwrap();
        assert!((x - exact).amax() < 1e-12);
    }
}
