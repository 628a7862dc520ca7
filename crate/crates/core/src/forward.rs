//! Linear forward operators and synthetic data generation.
//!
//! Three operator kinds cover the experiments: the identity (denoising), a
//! dense matrix, and a Kronecker-separable 2D operator A ⊗ A built from one
//! square 1D factor and applied without materializing the full matrix.
//! Vectors and images are related by column-stacking (`vectorize` /
//! `unvectorize`).

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub enum LinearOperator {
    Identity(usize),
    Dense(DMatrix<f64>),
    /// A = factor ⊗ factor with a square n×n factor; acts on vectors of
    /// length n².
    KroneckerSeparable(DMatrix<f64>),
}

impl LinearOperator {
    pub fn identity(n: usize) -> Self {
        LinearOperator::Identity(n)
    }

    pub fn dense(matrix: DMatrix<f64>) -> Self {
        LinearOperator::Dense(matrix)
    }

    pub fn kron_separable(factor: DMatrix<f64>) -> Result<Self> {
        if factor.nrows() != factor.ncols() {
            return Err(Error::dims(format!(
                "Kronecker factor must be square, got {}x{}",
                factor.nrows(),
                factor.ncols()
            )));
        }
        Ok(LinearOperator::KroneckerSeparable(factor))
    }

    /// Midpoint-discretized periodic-free Gaussian convolution on n points:
    /// A[i, j] = h κ(h (i - j)) with h = 1/n and
    /// κ(s) = exp(-s² / (2γ²)) / (2πγ²).
    ///
    /// The 1/(2πγ²) normalization makes the rows sum to ≈ 1/(√(2π) γ)
    /// rather than 1; the operator is kept in this form deliberately, so
    /// blurred data carries that scale factor.
    pub fn gaussian_blur_1d(n: usize, gamma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("blur operator needs at least one point"));
        }
        if !(gamma > 0.0) {
            return Err(Error::invalid(format!(
                "blur width must be positive, got {gamma}"
            )));
        }
        let h = 1.0 / n as f64;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * gamma * gamma);
        let kappa = |s: f64| norm * (-s * s / (2.0 * gamma * gamma)).exp();
        let m = DMatrix::from_fn(n, n, |i, j| h * kappa(h * (i as f64 - j as f64)));
        Ok(LinearOperator::Dense(m))
    }

    pub fn nrows(&self) -> usize {
        match self {
            LinearOperator::Identity(n) => *n,
            LinearOperator::Dense(m) => m.nrows(),
            LinearOperator::KroneckerSeparable(f) => f.nrows() * f.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            LinearOperator::Identity(n) => *n,
            LinearOperator::Dense(m) => m.ncols(),
            LinearOperator::KroneckerSeparable(f) => f.ncols() * f.ncols(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, LinearOperator::Identity(_))
    }

    fn check_len(&self, len: usize, expected: usize) -> Result<()> {
        if len != expected {
            return Err(Error::dims(format!(
                "operator expects a vector of length {expected}, got {len}"
            )));
        }
        Ok(())
    }

    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(v.len(), self.ncols())?;
        Ok(match self {
            LinearOperator::Identity(_) => v.clone(),
            LinearOperator::Dense(m) => m * v,
            LinearOperator::KroneckerSeparable(f) => {
                let n = f.nrows();
                let u = unvectorize(v, n, n)?;
                vectorize(&(f * u * f.transpose()))
            }
        })
    }

    pub fn apply_transpose(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(v.len(), self.nrows())?;
        Ok(match self {
            LinearOperator::Identity(_) => v.clone(),
            LinearOperator::Dense(m) => m.transpose() * v,
            LinearOperator::KroneckerSeparable(f) => {
                let n = f.nrows();
                let w = unvectorize(v, n, n)?;
                vectorize(&(f.transpose() * w * f))
            }
        })
    }

    /// Materialize the operator as a dense matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            LinearOperator::Identity(n) => DMatrix::identity(*n, *n),
            LinearOperator::Dense(m) => m.clone(),
            LinearOperator::KroneckerSeparable(f) => f.kronecker(f),
        }
    }
}

/// Column-stacking vectorization of a matrix.
pub fn vectorize(u: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(u.as_slice())
}

/// Inverse of `vectorize`: reshape a length-mn vector into an m×n matrix.
pub fn unvectorize(v: &DVector<f64>, m: usize, n: usize) -> Result<DMatrix<f64>> {
    if v.len() != m * n {
        return Err(Error::dims(format!(
            "cannot reshape a vector of length {} into {m}x{n}",
            v.len()
        )));
    }
    Ok(DMatrix::from_column_slice(m, n, v.as_slice()))
}

/// Synthetic observations b = A u + e with i.i.d. zero-mean Gaussian noise.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub truth: DVector<f64>,
    pub data: DVector<f64>,
    pub noise_variance: f64,
    pub seed: u64,
}

pub fn make_dataset(
    a: &LinearOperator,
    truth: &DVector<f64>,
    noise_variance: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    if !(noise_variance > 0.0) {
        return Err(Error::invalid(format!(
            "noise variance must be positive, got {noise_variance}"
        )));
    }
    let clean = a.apply(truth)?;
    let sigma = noise_variance.sqrt();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let data = DVector::from_iterator(
        clean.len(),
        clean.iter().map(|&c| {
            let draw: f64 = StandardNormal.sample(&mut rng);
            c + sigma * draw
        }),
    );
    Ok(SyntheticDataset {
        truth: truth.clone(),
        data,
        noise_variance,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    fn random_vector(n: usize, seed: u64) -> DVector<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn identity_behaves() {
        let a = LinearOperator::identity(5);
        let v = random_vector(5, 1);
        assert_eq!(a.apply(&v).unwrap(), v);
        assert_eq!(a.apply_transpose(&v).unwrap(), v);
    }

    #[test]
    fn blur_matrix_is_symmetric_toeplitz() {
        let a = match LinearOperator::gaussian_blur_1d(16, 0.1).unwrap() {
            LinearOperator::Dense(m) => m,
            _ => unreachable!(),
        };
        for i in 0..16 {
            for j in 0..16 {
                assert_abs_diff_eq!(a[(i, j)], a[(j, i)], epsilon = 1e-15);
                if i + 1 < 16 && j + 1 < 16 {
                    assert_abs_diff_eq!(a[(i, j)], a[(i + 1, j + 1)], epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn blur_interior_row_sums_agree() {
        let a = match LinearOperator::gaussian_blur_1d(64, 1.5e-2).unwrap() {
            LinearOperator::Dense(m) => m,
            _ => unreachable!(),
        };
        // Away from the boundary the discretized convolution is translation
        // invariant, so interior row sums coincide.
        let row_sum = |i: usize| (0..64).map(|j| a[(i, j)]).sum::<f64>();
        let reference = row_sum(32);
        for i in 16..48 {
            assert_abs_diff_eq!(row_sum(i), reference, epsilon = 1e-12);
        }
    }

    #[test]
    fn blur_rejects_bad_width() {
        assert!(LinearOperator::gaussian_blur_1d(8, 0.0).is_err());
        assert!(LinearOperator::gaussian_blur_1d(8, -0.5).is_err());
    }

    #[test]
    fn kron_apply_matches_dense_kronecker() {
        for n in [2usize, 3, 5, 8] {
            let f = random_matrix(n, n, n as u64);
            let a = LinearOperator::kron_separable(f.clone()).unwrap();
            let dense = a.to_dense();
            let v = random_vector(n * n, 100 + n as u64);
            let fast = a.apply(&v).unwrap();
            let slow = &dense * &v;
            assert!((fast - slow).amax() < 1e-12);
            let w = random_vector(n * n, 200 + n as u64);
            let fast_t = a.apply_transpose(&w).unwrap();
            let slow_t = dense.transpose() * &w;
            assert!((fast_t - slow_t).amax() < 1e-12);
        }
    }

    #[test]
    fn kron_with_identity_factor_is_identity() {
        let a = LinearOperator::kron_separable(DMatrix::identity(4, 4)).unwrap();
        let v = random_vector(16, 7);
        assert!((a.apply(&v).unwrap() - &v).amax() < 1e-14);
    }

    #[test]
    fn kron_rejects_non_square_factor() {
        assert!(LinearOperator::kron_separable(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn vectorize_is_column_major() {
        let u = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 2.0, 4.0]);
        let v = vectorize(&u);
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(unvectorize(&v, 2, 2).unwrap(), u);
    }

    #[test]
    fn kron_identity_on_random_instance() {
        // vec(A U B^T) = (B ⊗ A) vec(U)
        let a = random_matrix(2, 2, 11);
        let b = random_matrix(2, 2, 12);
        let u = random_matrix(2, 2, 13);
        let lhs = vectorize(&(&a * &u * b.transpose()));
        let rhs = b.kronecker(&a) * vectorize(&u);
        assert!((lhs - rhs).amax() < 1e-13);
    }

    #[test]
    fn adjoint_identity_on_all_kinds() {
        let ops = [
            LinearOperator::identity(12),
            LinearOperator::Dense(random_matrix(9, 12, 3)),
            LinearOperator::kron_separable(random_matrix(4, 4, 4)).unwrap(),
            LinearOperator::gaussian_blur_1d(12, 0.07).unwrap(),
        ];
        for (case, a) in ops.iter().enumerate() {
            for trial in 0..20u64 {
                let v = random_vector(a.ncols(), 1000 + trial);
                let w = random_vector(a.nrows(), 2000 + trial);
                let lhs = a.apply(&v).unwrap().dot(&w);
                let rhs = v.dot(&a.apply_transpose(&w).unwrap());
                assert!(
                    (lhs - rhs).abs() <= 1e-10 * v.norm() * w.norm(),
                    "adjoint identity failed for operator {case}"
                );
            }
        }
    }

    #[test]
    fn dataset_is_reproducible_and_noisy() {
        let a = LinearOperator::identity(10_000);
        let truth = DVector::from_element(10_000, 0.3);
        let sigma2 = 0.04;
        let d1 = make_dataset(&a, &truth, sigma2, 42).unwrap();
        let d2 = make_dataset(&a, &truth, sigma2, 42).unwrap();
        assert_eq!(d1.data, d2.data);
        let residual = &d1.data - &truth;
        let var = residual.norm_squared() / residual.len() as f64;
        assert!((var - sigma2).abs() < 0.05 * sigma2);
    }

    #[test]
    fn vanishing_noise_recovers_the_clean_data() {
        let a = LinearOperator::gaussian_blur_1d(12, 0.1).unwrap();
        let truth = random_vector(12, 5);
        let clean = a.apply(&truth).unwrap();
        let d = make_dataset(&a, &truth, 1e-30, 3).unwrap();
        assert!((d.data - clean).amax() < 1e-12);
    }

    #[test]
    fn dataset_rejects_nonpositive_variance() {
        let a = LinearOperator::identity(4);
        let truth = DVector::zeros(4);
        assert!(make_dataset(&a, &truth, 0.0, 1).is_err());
    }

    proptest! {
        #[test]
        fn unvectorize_roundtrip(m in 1usize..6, n in 1usize..6, seed in 0u64..1000) {
            let u = random_matrix(m, n, seed);
            let round = unvectorize(&vectorize(&u), m, n).unwrap();
            prop_assert_eq!(round, u);
        }
    }
}
