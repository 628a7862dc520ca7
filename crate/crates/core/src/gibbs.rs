//! Gibbs sampler for the Bayesian SIAC posterior.
//!
//! The full conditionals are exactly tractable: u | α, β is Gaussian with
//! precision C = α AᵀA + β (F-I)ᵀ(F-I) and mean C⁻¹ α Aᵀb, while α and β are
//! gamma (shape/rate). A u-draw solves C u = α Aᵀb + w with the noise vector
//! assembled as w = √α Aᵀv₁ + √β (F-I)ᵀv₂ from standard normal v₁, v₂, which
//! has covariance exactly C.
//!
//! Chains run independently (in parallel) with per-chain RNG streams derived
//! from (seed, chain index), so results are bitwise reproducible regardless
//! of scheduling. Stored sample j holds (u_j, α_j, β_j) where α_j, β_j are
//! the precision values used to draw u_j; the hyper draws produced from the
//! final u are discarded.

use crate::error::{Error, Result};
use crate::model::BayesSiacModel;
use crate::solver::{self, SolverKind};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

/// Guard against extreme prior draws: the initial β is capped so the first
/// u-solve stays well conditioned.
const INITIAL_BETA_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Draw the initial precisions from their gamma hyper-priors.
    PriorDraw,
}

#[derive(Debug, Clone, Copy)]
pub struct GibbsOptions {
    /// Samples per chain.
    pub samples: usize,
    pub chains: usize,
    /// Fraction of each chain flagged as burn-in, in [0, 1).
    pub burn_in_fraction: f64,
    pub seed: u64,
    pub solver: SolverKind,
    pub cg_tol: f64,
    pub init: InitMode,
    /// Test hook: hold (α, β) fixed instead of sampling them, which also
    /// enables factorization reuse across draws.
    pub fixed_hypers: Option<(f64, f64)>,
}

impl GibbsOptions {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            chains: 4,
            burn_in_fraction: 0.10,
            seed,
            solver: SolverKind::DirectSpd,
            cg_tol: 1e-10,
            init: InitMode::PriorDraw,
            fixed_hypers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::invalid("need at least one sample"));
        }
        if self.chains == 0 {
            return Err(Error::invalid("need at least one chain"));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::invalid(format!(
                "burn-in fraction must lie in [0, 1), got {}",
                self.burn_in_fraction
            )));
        }
        if let Some((a, b)) = self.fixed_hypers {
            if !(a > 0.0) || !(b > 0.0) {
                return Err(Error::invalid("fixed precisions must be positive"));
            }
        }
        Ok(())
    }
}

/// Draws of one chain; row j of `u` is the j-th u-sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    pub u: DMatrix<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ChainDraws {
    /// Post-burn-in u-samples as an owned matrix.
    pub fn u_after(&self, burn_in: usize) -> DMatrix<f64> {
        self.u.rows(burn_in, self.u.nrows() - burn_in).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSamples {
    pub chains: Vec<ChainDraws>,
    pub burn_in: usize,
    pub seed: u64,
}

impl ChainSamples {
    pub fn num_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn samples_per_chain(&self) -> usize {
        self.chains.first().map_or(0, |c| c.u.nrows())
    }

    /// Post-burn-in u-samples of all chains stacked row-wise.
    pub fn pooled_u(&self) -> DMatrix<f64> {
        let kept = self.samples_per_chain() - self.burn_in;
        let dim = self.chains[0].u.ncols();
        let mut pooled = DMatrix::zeros(kept * self.num_chains(), dim);
        for (c, chain) in self.chains.iter().enumerate() {
            pooled
                .rows_mut(c * kept, kept)
                .copy_from(&chain.u.rows(self.burn_in, kept));
        }
        pooled
    }
}

/// Deterministic per-chain RNG stream keyed by (seed, chain).
fn chain_rng(seed: u64, chain: usize) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(chain as u64).to_le_bytes());
    key[16..24].copy_from_slice(b"siacgibb");
    ChaCha12Rng::from_seed(key)
}

fn gamma_draw<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    // rand_distr parameterizes by scale.
    let dist = Gamma::new(shape, 1.0 / rate).expect("gamma parameters are positive");
    dist.sample(rng)
}

fn standard_normal_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// One exact draw from u | α, β, b ~ N(C⁻¹ α Aᵀb, C⁻¹), up to solver
/// tolerance.
pub fn sample_u_conditional<R: Rng + ?Sized>(
    model: &BayesSiacModel,
    alpha: f64,
    beta: f64,
    rng: &mut R,
    solver: SolverKind,
    cg_tol: f64,
    warm_start: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    if !(alpha > 0.0) || !(beta > 0.0) {
        return Err(Error::invalid(format!(
            "precisions must be positive, got alpha={alpha}, beta={beta}"
        )));
    }
    let (m, n) = model.dims();
    let v1 = standard_normal_vector(rng, m);
    let v2 = standard_normal_vector(rng, n);
    let w = alpha.sqrt() * model.operator().apply_transpose(&v1)?
        + beta.sqrt() * model.prior_residual_transpose(&v2)?;
    let rhs = model.at_b() * alpha + w;
    solver::solve_precision(model, alpha, beta, &rhs, solver, warm_start, cg_tol)
}

/// α | u, β, b ~ Γ(M/2 + c_α, ‖Au - b‖²/2 + d_α).
pub fn sample_alpha_conditional<R: Rng + ?Sized>(
    model: &BayesSiacModel,
    u: &DVector<f64>,
    rng: &mut R,
) -> Result<f64> {
    let (m, _) = model.dims();
    let p = model.priors();
    let shape = m as f64 / 2.0 + p.c_alpha;
    let rate = 0.5 * model.residual_norm_sq(u)? + p.d_alpha;
    Ok(gamma_draw(rng, shape, rate))
}

/// β | u, α, b ~ Γ(N/2 + c_β, ‖(F-I)u‖²/2 + d_β).
pub fn sample_beta_conditional<R: Rng + ?Sized>(
    model: &BayesSiacModel,
    u: &DVector<f64>,
    rng: &mut R,
) -> Result<f64> {
    let (_, n) = model.dims();
    let p = model.priors();
    let shape = n as f64 / 2.0 + p.c_beta;
    let rate = 0.5 * model.prior_residual_norm_sq(u)? + p.d_beta;
    Ok(gamma_draw(rng, shape, rate))
}

fn run_chain(model: &BayesSiacModel, opts: &GibbsOptions, chain: usize) -> Result<ChainDraws> {
    let (_, n) = model.dims();
    let p = model.priors();
    let mut rng = chain_rng(opts.seed, chain);

    let (mut alpha, mut beta, fixed) = match opts.fixed_hypers {
        Some((a, b)) => (a, b, true),
        None => {
            let InitMode::PriorDraw = opts.init;
            let a = gamma_draw(&mut rng, p.c_alpha, p.d_alpha);
            let b = gamma_draw(&mut rng, p.c_beta, p.d_beta).min(INITIAL_BETA_CAP);
            (a, b, false)
        }
    };

    // With fixed precisions C never changes, so one factorization serves all
    // draws on the direct path.
    let cached_cholesky = if fixed && opts.solver == SolverKind::DirectSpd {
        Some(solver::cholesky_spd(model.dense_precision(alpha, beta))?)
    } else {
        None
    };

    let mut u_samples = DMatrix::zeros(opts.samples, n);
    let mut alphas = Vec::with_capacity(opts.samples);
    let mut betas = Vec::with_capacity(opts.samples);
    let mut prev_u: Option<DVector<f64>> = None;

    for j in 0..opts.samples {
        let u = if let Some(chol) = &cached_cholesky {
            let (m_dim, _) = model.dims();
            let v1 = standard_normal_vector(&mut rng, m_dim);
            let v2 = standard_normal_vector(&mut rng, n);
            let w = alpha.sqrt() * model.operator().apply_transpose(&v1)?
                + beta.sqrt() * model.prior_residual_transpose(&v2)?;
            chol.solve(&(model.at_b() * alpha + w))
        } else {
            sample_u_conditional(
                model,
                alpha,
                beta,
                &mut rng,
                opts.solver,
                opts.cg_tol,
                prev_u.as_ref(),
            )?
        };
        u_samples.row_mut(j).copy_from(&u.transpose());
        alphas.push(alpha);
        betas.push(beta);
        if !fixed {
            alpha = sample_alpha_conditional(model, &u, &mut rng)?;
            beta = sample_beta_conditional(model, &u, &mut rng)?;
        }
        prev_u = Some(u);
    }

    Ok(ChainDraws {
        u: u_samples,
        alpha: alphas,
        beta: betas,
    })
}

/// Run independent Gibbs chains; burn-in samples are retained in the output
/// but flagged by `ChainSamples::burn_in`.
pub fn run_gibbs(model: &BayesSiacModel, opts: &GibbsOptions) -> Result<ChainSamples> {
    opts.validate()?;
    let chains: Result<Vec<ChainDraws>> = (0..opts.chains)
        .into_par_iter()
        .map(|c| run_chain(model, opts, c))
        .collect();
    Ok(ChainSamples {
        chains: chains?,
        burn_in: (opts.samples as f64 * opts.burn_in_fraction).floor() as usize,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::FilterMatrix;
    use crate::forward::LinearOperator;
    use crate::kernel::SiacKernelSpec;
    use crate::mesh::{NodeLayout, UniformPeriodicMesh};
    use crate::model::HyperPriors;
    use nalgebra::DVector;
    use rand::Rng;

    fn small_model(seed: u64) -> BayesSiacModel {
        let mesh = UniformPeriodicMesh::new(0.0, 1.0, 4, 1, NodeLayout::GaussLegendre).unwrap();
        let spec = SiacKernelSpec::build(2, 2).unwrap();
        let filter = FilterMatrix::build(&mesh, &spec).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let b = DVector::from_fn(filter.size(), |_, _| rng.sample::<f64, _>(StandardNormal));
        BayesSiacModel::new(
            LinearOperator::identity(filter.size()),
            b,
            &filter,
            HyperPriors::default(),
        )
        .unwrap()
    }

    #[test]
    fn alpha_conditional_moments() {
        let model = small_model(5);
        let u = DVector::from_element(model.dims().1, 0.25);
        let (m, _) = model.dims();
        let p = model.priors();
        let shape = m as f64 / 2.0 + p.c_alpha;
        let rate = 0.5 * model.residual_norm_sq(&u).unwrap() + p.d_alpha;
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| sample_alpha_conditional(&model, &u, &mut rng).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        assert!((mean - shape / rate).abs() < 0.01 * shape / rate);
        let target_var = shape / (rate * rate);
        assert!((var - target_var).abs() < 0.03 * target_var);
    }

    #[test]
    fn gamma_mode_matches_bcd_update() {
        // The BCD α-update is the mode (shape - 1)/rate of this conditional.
        let model = small_model(6);
        let u = DVector::from_element(model.dims().1, -0.4);
        let (m, _) = model.dims();
        let p = model.priors();
        let shape = m as f64 / 2.0 + p.c_alpha;
        let rate = 0.5 * model.residual_norm_sq(&u).unwrap() + p.d_alpha;
        let bcd = crate::map::update_alpha(&model, &u).unwrap();
        assert!(((shape - 1.0) / rate - bcd).abs() < 1e-12 * bcd);
    }

    #[test]
    fn u_conditional_reduces_to_scalar_gaussian() {
        // A = I with prior residual F - I = I (take F = 2I): the conditional
        // collapses to N(α/(α+β) b, (α+β)⁻¹ I).
        let n = 5;
        let b = DVector::from_fn(n, |i, _| 1.0 + i as f64);
        let model = BayesSiacModel::from_operators(
            LinearOperator::identity(n),
            b.clone(),
            LinearOperator::dense(nalgebra::DMatrix::identity(n, n) * 2.0),
            HyperPriors::default(),
        )
        .unwrap();
        let (alpha, beta) = (3.0, 1.0);
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let draws = 10_000;
        let mut mean = DVector::zeros(n);
        for _ in 0..draws {
            mean += sample_u_conditional(
                &model,
                alpha,
                beta,
                &mut rng,
                SolverKind::DirectSpd,
                1e-12,
                None,
            )
            .unwrap();
        }
        mean /= draws as f64;
        let target = &b * (alpha / (alpha + beta));
        let se = (1.0 / ((alpha + beta) * draws as f64)).sqrt();
        for i in 0..n {
            assert!(
                (mean[i] - target[i]).abs() < 3.0 * se,
                "coordinate {i}: {} vs {}",
                mean[i],
                target[i]
            );
        }
    }

    #[test]
    fn large_beta_concentrates_on_filter_invariant_vectors() {
        let model = small_model(9);
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let avg = |beta: f64, rng: &mut ChaCha12Rng| -> f64 {
            (0..100)
                .map(|_| {
                    let u = sample_u_conditional(
                        &model,
                        1.0,
                        beta,
                        rng,
                        SolverKind::DirectSpd,
                        1e-12,
                        None,
                    )
                    .unwrap();
                    model.prior_residual_norm_sq(&u).unwrap().sqrt()
                })
                .sum::<f64>()
                / 100.0
        };
        let loose = avg(1e2, &mut rng);
        let tight = avg(1e8, &mut rng);
        assert!(tight < 0.1 * loose);
    }

    #[test]
    fn fixed_seed_reproduces_bitwise() {
        let model = small_model(11);
        let opts = GibbsOptions {
            chains: 3,
            ..GibbsOptions::new(50, 4242)
        };
        let s1 = run_gibbs(&model, &opts).unwrap();
        let s2 = run_gibbs(&model, &opts).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn fixed_hypers_chain_mean_matches_gaussian_oracle() {
        let model = small_model(13);
        let (alpha, beta) = (4.0, 2.0);
        let opts = GibbsOptions {
            chains: 1,
            fixed_hypers: Some((alpha, beta)),
            ..GibbsOptions::new(20_000, 99)
        };
        let samples = run_gibbs(&model, &opts).unwrap();
        let pooled = samples.pooled_u();
        let n = model.dims().1;
        let c = model.dense_precision(alpha, beta);
        let chol = c.cholesky().unwrap();
        let target = chol.solve(&(model.at_b() * alpha));
        let cov = chol.inverse();
        for i in 0..n {
            let mean_i = pooled.column(i).sum() / pooled.nrows() as f64;
            let se = (cov[(i, i)] / pooled.nrows() as f64).sqrt();
            assert!(
                (mean_i - target[i]).abs() < 5.0 * se,
                "coordinate {i}: {mean_i} vs {}",
                target[i]
            );
        }
    }

    #[test]
    fn burn_in_bookkeeping() {
        let model = small_model(15);
        let opts = GibbsOptions {
            chains: 2,
            ..GibbsOptions::new(40, 7)
        };
        let samples = run_gibbs(&model, &opts).unwrap();
        assert_eq!(samples.burn_in, 4);
        assert_eq!(samples.samples_per_chain(), 40);
        assert_eq!(samples.pooled_u().nrows(), 2 * 36);
        for chain in &samples.chains {
            assert!(chain.alpha.iter().all(|a| *a > 0.0));
            assert!(chain.beta.iter().all(|b| *b > 0.0));
        }
    }

    #[test]
    fn option_validation() {
        assert!(GibbsOptions::new(0, 1).validate().is_err());
        let mut opts = GibbsOptions::new(10, 1);
        opts.burn_in_fraction = 1.0;
        assert!(opts.validate().is_err());
        opts.burn_in_fraction = 0.5;
        opts.chains = 0;
        assert!(opts.validate().is_err());
    }
}
