//! Hierarchical Bayesian model with a SIAC smoothness prior.
//!
//! The model combines a Gaussian likelihood b | u, α ~ N(Au, α⁻¹I) with the
//! prior (F - I)u ~ N(0, β⁻¹I) and gamma hyper-priors on the two precisions
//! (shape/rate convention). The negative log posterior is the Gibbs energy
//!
//!   J(u, α, β) = α/2 ‖Au - b‖² + β/2 ‖(F - I)u‖² + d_α α + d_β β
//!                - (M/2 + c_α - 1) log α - (N/2 + c_β - 1) log β,
//!
//! defined up to additive constants. The u-subproblem precision matrix is
//! C = α AᵀA + β (F-I)ᵀ(F-I); it is positive definite exactly when A and
//! F - I share no nontrivial kernel, which the constructor certifies.

use crate::error::{Error, Result};
use crate::filter::FilterMatrix;
use crate::forward::LinearOperator;
use nalgebra::{DMatrix, DVector};
use std::sync::OnceLock;

/// Shape/rate parameters of the gamma hyper-priors on the noise precision α
/// and prior precision β.
#[derive(Debug, Clone, Copy)]
pub struct HyperPriors {
    pub c_alpha: f64,
    pub d_alpha: f64,
    pub c_beta: f64,
    pub d_beta: f64,
}

impl Default for HyperPriors {
    /// Approximately uninformative choice c = 1, d = 1e-3.
    fn default() -> Self {
        Self {
            c_alpha: 1.0,
            d_alpha: 1e-3,
            c_beta: 1.0,
            d_beta: 1e-3,
        }
    }
}

impl HyperPriors {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_alpha", self.c_alpha),
            ("d_alpha", self.d_alpha),
            ("c_beta", self.c_beta),
            ("d_beta", self.d_beta),
        ] {
            if !(v > 0.0) {
                return Err(Error::invalid(format!(
                    "hyper-prior parameter {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Dimension cap for dense eigenvalue certification of the common kernel
/// condition; larger models fall back to structural checks.
const DENSE_EIGEN_LIMIT: usize = 2048;

#[derive(Debug)]
pub struct BayesSiacModel {
    a: LinearOperator,
    b: DVector<f64>,
    filter: LinearOperator,
    priors: HyperPriors,
    at_b: DVector<f64>,
    /// Cached dense Gram matrices (AᵀA, (F-I)ᵀ(F-I)) for direct solves.
    grams: OnceLock<(DMatrix<f64>, DMatrix<f64>)>,
}

impl BayesSiacModel {
    /// Standard 1D construction from a filter matrix.
    pub fn new(
        a: LinearOperator,
        b: DVector<f64>,
        filter: &FilterMatrix,
        priors: HyperPriors,
    ) -> Result<Self> {
        Self::from_operators(a, b, LinearOperator::dense(filter.to_dense()), priors)
    }

    /// General construction; `filter` is the N×N filter as a linear operator
    /// (dense in 1D, Kronecker-separable for tensorized 2D filtering).
    pub fn from_operators(
        a: LinearOperator,
        b: DVector<f64>,
        filter: LinearOperator,
        priors: HyperPriors,
    ) -> Result<Self> {
        priors.validate()?;
        let (m, n) = (a.nrows(), a.ncols());
        if b.len() != m {
            return Err(Error::dims(format!(
                "data vector has length {}, expected {m}",
                b.len()
            )));
        }
        if filter.nrows() != n || filter.ncols() != n {
            return Err(Error::dims(format!(
                "filter must be {n}x{n}, got {}x{}",
                filter.nrows(),
                filter.ncols()
            )));
        }
        if m as f64 / 2.0 + priors.c_alpha - 1.0 <= 0.0 {
            return Err(Error::invalid("require M/2 + c_alpha - 1 > 0"));
        }
        if n as f64 / 2.0 + priors.c_beta - 1.0 <= 0.0 {
            return Err(Error::invalid("require N/2 + c_beta - 1 > 0"));
        }
        let at_b = a.apply_transpose(&b)?;
        let model = Self {
            a,
            b,
            filter,
            priors,
            at_b,
            grams: OnceLock::new(),
        };
        if !model.common_kernel_holds() {
            return Err(Error::UnsupportedConfiguration(
                "common kernel condition violated: ker(A) ∩ ker(F - I) is nontrivial".into(),
            ));
        }
        Ok(model)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.a.nrows(), self.a.ncols())
    }

    pub fn operator(&self) -> &LinearOperator {
        &self.a
    }

    pub fn data(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn filter_operator(&self) -> &LinearOperator {
        &self.filter
    }

    pub fn priors(&self) -> &HyperPriors {
        &self.priors
    }

    /// Cached Aᵀb.
    pub fn at_b(&self) -> &DVector<f64> {
        &self.at_b
    }

    /// Residual Au - b.
    pub fn residual(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.a.apply(u)? - &self.b)
    }

    /// ‖Au - b‖².
    pub fn residual_norm_sq(&self, u: &DVector<f64>) -> Result<f64> {
        Ok(self.residual(u)?.norm_squared())
    }

    /// Prior residual (F - I)u.
    pub fn prior_residual(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.filter.apply(u)? - u)
    }

    /// ‖(F - I)u‖².
    pub fn prior_residual_norm_sq(&self, u: &DVector<f64>) -> Result<f64> {
        Ok(self.prior_residual(u)?.norm_squared())
    }

    /// (F - I)ᵀ v.
    pub fn prior_residual_transpose(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.filter.apply_transpose(v)? - v)
    }

    /// Gibbs energy (negative log posterior up to an additive constant).
    pub fn gibbs_energy(&self, u: &DVector<f64>, alpha: f64, beta: f64) -> Result<f64> {
        if !(alpha > 0.0) || !(beta > 0.0) {
            return Err(Error::invalid(format!(
                "precisions must be positive, got alpha={alpha}, beta={beta}"
            )));
        }
        let (m, n) = self.dims();
        let p = &self.priors;
        Ok(0.5 * alpha * self.residual_norm_sq(u)?
            + 0.5 * beta * self.prior_residual_norm_sq(u)?
            + p.d_alpha * alpha
            + p.d_beta * beta
            - (m as f64 / 2.0 + p.c_alpha - 1.0) * alpha.ln()
            - (n as f64 / 2.0 + p.c_beta - 1.0) * beta.ln())
    }

    /// Gradient of the Gibbs energy in u: α Aᵀ(Au - b) + β (F-I)ᵀ(F-I)u.
    pub fn gibbs_energy_grad_u(
        &self,
        u: &DVector<f64>,
        alpha: f64,
        beta: f64,
    ) -> Result<DVector<f64>> {
        if !(alpha > 0.0) || !(beta > 0.0) {
            return Err(Error::invalid(format!(
                "precisions must be positive, got alpha={alpha}, beta={beta}"
            )));
        }
        let lik = self.a.apply_transpose(&self.residual(u)?)?;
        let prior = self.prior_residual_transpose(&self.prior_residual(u)?)?;
        Ok(alpha * lik + beta * prior)
    }

    /// Matrix-free application of C = α AᵀA + β (F-I)ᵀ(F-I).
    pub fn apply_precision(&self, alpha: f64, beta: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        let lik = self.a.apply_transpose(&self.a.apply(v)?)?;
        let prior = self.prior_residual_transpose(&self.prior_residual(v)?)?;
        Ok(alpha * lik + beta * prior)
    }

    /// Dense Gram matrices (AᵀA, (F-I)ᵀ(F-I)), built on first use.
    pub fn grams(&self) -> &(DMatrix<f64>, DMatrix<f64>) {
        self.grams.get_or_init(|| {
            let n = self.a.ncols();
            let at_a = match &self.a {
                LinearOperator::Identity(n) => DMatrix::identity(*n, *n),
                other => {
                    let dense = other.to_dense();
                    dense.transpose() * dense
                }
            };
            let f_dense = self.filter.to_dense();
            let r = f_dense - DMatrix::identity(n, n);
            let rt_r = r.transpose() * r;
            (at_a, rt_r)
        })
    }

    /// Dense C = α AᵀA + β (F-I)ᵀ(F-I).
    pub fn dense_precision(&self, alpha: f64, beta: f64) -> DMatrix<f64> {
        let (at_a, rt_r) = self.grams();
        let mut c = rt_r * beta;
        c += at_a * alpha;
        c
    }

    /// Certify ker(A) ∩ ker(F - I) = {0} by checking that the smallest
    /// eigenvalue of C = AᵀA + (F-I)ᵀ(F-I) exceeds `tol`.
    ///
    /// Small models use a dense symmetric eigensolve. Larger models take
    /// structural shortcuts (identity A is trivially injective; a full-rank
    /// Kronecker factor makes AᵀA positive definite) and otherwise fall back
    /// to a shifted power iteration, which is a probe rather than a proof.
    pub fn check_common_kernel(&self, tol: f64) -> bool {
        if self.a.is_identity() {
            return 1.0 > tol;
        }
        let n = self.a.ncols();
        if n <= DENSE_EIGEN_LIMIT {
            let c = self.dense_precision(1.0, 1.0);
            let eigen = c.symmetric_eigen();
            let min = eigen
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            return min > tol;
        }
        if let LinearOperator::KroneckerSeparable(f) = &self.a {
            let gram = f.transpose() * f;
            let eigen = gram.symmetric_eigen();
            let min = eigen
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            // λ_min(AᵀA) = λ_min(fᵀf)²; positive definiteness of the A-term
            // alone is sufficient.
            if min * min > tol {
                return true;
            }
        }
        self.power_iteration_min_eigenvalue_probe() > tol
    }

    /// Common kernel check with the default tolerance 1e-10 · λ_max(C).
    pub fn common_kernel_holds(&self) -> bool {
        let lambda_max = self.estimate_precision_norm();
        self.check_common_kernel(1e-10 * lambda_max.max(f64::MIN_POSITIVE))
    }

    /// Crude largest-eigenvalue estimate of C at α = β = 1.
    fn estimate_precision_norm(&self) -> f64 {
        let n = self.a.ncols();
        let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.7).sin());
        v /= v.norm();
        let mut lambda = 1.0;
        for _ in 0..30 {
            let w = match self.apply_precision(1.0, 1.0, &v) {
                Ok(w) => w,
                Err(_) => return 1.0,
            };
            lambda = w.norm();
            if lambda == 0.0 {
                return 0.0;
            }
            v = w / lambda;
        }
        lambda
    }

    /// Estimate λ_min(C) via power iteration on λ_max I - C.
    fn power_iteration_min_eigenvalue_probe(&self) -> f64 {
        let n = self.a.ncols();
        let lambda_max = self.estimate_precision_norm() * 1.05;
        let mut v = DVector::from_fn(n, |i, _| ((i * 37 + 11) % 101) as f64 / 101.0 - 0.5);
        v /= v.norm();
        let mut shifted = 0.0;
        for _ in 0..200 {
            let cv = match self.apply_precision(1.0, 1.0, &v) {
                Ok(w) => w,
                Err(_) => return 0.0,
            };
            let w = lambda_max * &v - cv;
            shifted = w.norm();
            if shifted == 0.0 {
                break;
            }
            v = w / shifted;
        }
        (lambda_max - shifted).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::FilterMatrix;
    use crate::kernel::SiacKernelSpec;
    use crate::mesh::{NodeLayout, UniformPeriodicMesh};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn small_filter() -> FilterMatrix {
        let mesh = UniformPeriodicMesh::new(0.0, 1.0, 6, 1, NodeLayout::GaussLegendre).unwrap();
        let spec = SiacKernelSpec::build(2, 2).unwrap();
        FilterMatrix::build(&mesh, &spec).unwrap()
    }

    fn random_vector(n: usize, seed: u64) -> DVector<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    fn denoising_model(seed: u64) -> BayesSiacModel {
        let f = small_filter();
        let n = f.size();
        let b = random_vector(n, seed);
        BayesSiacModel::new(LinearOperator::identity(n), b, &f, HyperPriors::default()).unwrap()
    }

    #[test]
    fn energy_reduces_to_hyper_terms_for_zero_data() {
        let f = small_filter();
        let n = f.size();
        let model = BayesSiacModel::new(
            LinearOperator::identity(n),
            DVector::zeros(n),
            &f,
            HyperPriors::default(),
        )
        .unwrap();
        let u = DVector::zeros(n);
        let (alpha, beta) = (2.0, 3.0);
        let p = HyperPriors::default();
        let expected = p.d_alpha * alpha + p.d_beta * beta
            - (n as f64 / 2.0) * alpha.ln()
            - (n as f64 / 2.0) * beta.ln();
        assert_abs_diff_eq!(
            model.gibbs_energy(&u, alpha, beta).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn energy_rejects_nonpositive_precisions() {
        let model = denoising_model(3);
        let u = DVector::zeros(model.dims().1);
        assert!(model.gibbs_energy(&u, 0.0, 1.0).is_err());
        assert!(model.gibbs_energy(&u, 1.0, -2.0).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let model = denoising_model(7);
        let n = model.dims().1;
        let u = random_vector(n, 17);
        let (alpha, beta) = (1.7, 0.9);
        let grad = model.gibbs_energy_grad_u(&u, alpha, beta).unwrap();
        let h = 1e-6;
        for i in 0..n {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (model.gibbs_energy(&up, alpha, beta).unwrap()
                - model.gibbs_energy(&dn, alpha, beta).unwrap())
                / (2.0 * h);
            let denom = grad[i].abs().max(1.0);
            assert!(
                (grad[i] - fd).abs() / denom <= 1e-5,
                "coordinate {i}: analytic {} vs fd {fd}",
                grad[i]
            );
        }
    }

    #[test]
    fn energy_is_midpoint_convex_in_u() {
        let model = denoising_model(11);
        let n = model.dims().1;
        let (alpha, beta) = (1.3, 2.1);
        for trial in 0..10u64 {
            let u1 = random_vector(n, 100 + trial);
            let u2 = random_vector(n, 200 + trial);
            let mid = (&u1 + &u2) * 0.5;
            let j_mid = model.gibbs_energy(&mid, alpha, beta).unwrap();
            let j_avg = 0.5
                * (model.gibbs_energy(&u1, alpha, beta).unwrap()
                    + model.gibbs_energy(&u2, alpha, beta).unwrap());
            assert!(j_mid < j_avg);
        }
    }

    #[test]
    fn energy_tracks_log_posterior_differences() {
        let model = denoising_model(5);
        let n = model.dims().1;
        let (m_dim, _) = model.dims();
        let p = *model.priors();
        let log_posterior = |u: &DVector<f64>, alpha: f64, beta: f64| -> f64 {
            let r = model.residual_norm_sq(u).unwrap();
            let s = model.prior_residual_norm_sq(u).unwrap();
            (m_dim as f64 / 2.0 + p.c_alpha - 1.0) * alpha.ln()
                + (n as f64 / 2.0 + p.c_beta - 1.0) * beta.ln()
                - 0.5 * alpha * r
                - 0.5 * beta * s
                - p.d_alpha * alpha
                - p.d_beta * beta
        };
        let u1 = random_vector(n, 31);
        let u2 = random_vector(n, 32);
        let j1 = model.gibbs_energy(&u1, 0.8, 1.9).unwrap();
        let j2 = model.gibbs_energy(&u2, 2.2, 0.4).unwrap();
        let lp1 = log_posterior(&u1, 0.8, 1.9);
        let lp2 = log_posterior(&u2, 2.2, 0.4);
        assert_abs_diff_eq!(j1 - j2, lp2 - lp1, epsilon = 1e-8);
    }

    #[test]
    fn common_kernel_accepts_identity_and_rejects_degenerate() {
        let model = denoising_model(1);
        assert!(model.check_common_kernel(1e-10));

        // A = 0 and F = I leave the whole space in the common kernel.
        let n = 6;
        let zero_a = LinearOperator::Dense(DMatrix::zeros(n, n));
        let ident_f = LinearOperator::identity(n);
        let result = BayesSiacModel::from_operators(
            zero_a,
            DVector::zeros(n),
            ident_f,
            HyperPriors::default(),
        );
        assert!(matches!(result, Err(Error::UnsupportedConfiguration(_))));
    }

    #[test]
    fn full_rank_blur_passes_common_kernel() {
        let n = 16;
        let a1 = match LinearOperator::gaussian_blur_1d(n, 1.5e-2).unwrap() {
            LinearOperator::Dense(m) => m,
            _ => unreachable!(),
        };
        let a = LinearOperator::kron_separable(a1).unwrap();
        // Prior operator: 2D filter from a k=1 mesh on n points per axis.
        let mesh =
            UniformPeriodicMesh::new(0.0, 1.0, n / 2, 1, NodeLayout::EquidistantInCell).unwrap();
        let spec = SiacKernelSpec::build(2, 2).unwrap();
        let f1 = FilterMatrix::build(&mesh, &spec).unwrap().to_dense();
        let filter = LinearOperator::kron_separable(f1).unwrap();
        let b = DVector::zeros(n * n);
        let model = BayesSiacModel::from_operators(a, b, filter, HyperPriors::default()).unwrap();
        assert!(model.check_common_kernel(1e-12));
    }

    #[test]
    fn matrix_free_precision_matches_dense() {
        let model = denoising_model(23);
        let n = model.dims().1;
        let v = random_vector(n, 77);
        let (alpha, beta) = (0.6, 1.4);
        let fast = model.apply_precision(alpha, beta, &v).unwrap();
        let slow = model.dense_precision(alpha, beta) * &v;
        assert!((fast - slow).amax() < 1e-11);
    }
}
