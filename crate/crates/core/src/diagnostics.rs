//! MCMC quality metrics and posterior summaries.
//!
//! ESS uses the integrated autocorrelation time with Geyer's initial
//! positive sequence truncation, averaged over coordinates. MPSRF is the
//! Brooks–Gelman multivariate statistic in its largest-generalized-eigenvalue
//! form; the eigenvalue is computed in the chain-count-dimensional subspace
//! spanned by the chain means, so the cost is dominated by one Cholesky of
//! the pooled within-chain covariance. Quantile bands interpolate linearly
//! between order statistics.

use crate::error::{Error, Result};
use crate::gibbs::ChainSamples;
use nalgebra::{DMatrix, DVector};

/// Relative ℓ2 error ‖estimate - truth‖ / ‖truth‖.
pub fn rel_l2_error(estimate: &DVector<f64>, truth: &DVector<f64>) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::dims(format!(
            "length mismatch: {} vs {}",
            estimate.len(),
            truth.len()
        )));
    }
    let denom = truth.norm();
    if denom == 0.0 {
        return Err(Error::invalid("relative error undefined for zero truth"));
    }
    Ok((estimate - truth).norm() / denom)
}

/// Effective sample size of one chain (rows = samples, columns =
/// coordinates), averaged over coordinates.
///
/// Per coordinate: ESS = J / (1 + 2 Σ ρ_t) with the autocorrelation sum
/// truncated where Geyer's lag-pair sums turn non-positive. A constant
/// coordinate counts as independent (ESS = J by convention), and estimates
/// are clamped to [1, 1.25 J] to absorb antithetic noise.
pub fn ess(chain: &DMatrix<f64>) -> Result<f64> {
    let j = chain.nrows();
    if j < 10 {
        return Err(Error::invalid(format!(
            "need at least 10 samples for an ESS estimate, got {j}"
        )));
    }
    let d = chain.ncols();
    let mut total = 0.0;
    let mut centered = vec![0.0; j];
    for col in 0..d {
        let mean = chain.column(col).sum() / j as f64;
        for i in 0..j {
            centered[i] = chain[(i, col)] - mean;
        }
        let gamma0 = centered.iter().map(|c| c * c).sum::<f64>() / j as f64;
        let scale = chain.column(col).iter().map(|v| v * v).sum::<f64>() / j as f64;
        let ess_col = if gamma0 <= 1e-28 * scale.max(f64::MIN_POSITIVE) {
            j as f64
        } else {
            let autocov = |t: usize| -> f64 {
                let mut acc = 0.0;
                for i in 0..j - t {
                    acc += centered[i] * centered[i + t];
                }
                acc / j as f64
            };
            let mut rho_sum = 0.0;
            let mut t = 1;
            while t + 1 < j {
                let pair = (autocov(t) + autocov(t + 1)) / gamma0;
                if pair <= 0.0 {
                    break;
                }
                rho_sum += pair;
                t += 2;
            }
            let tau = 1.0 + 2.0 * rho_sum;
            j as f64 / tau
        };
        total += ess_col.clamp(1.0, 1.25 * j as f64);
    }
    Ok(total / d as f64)
}

#[derive(Debug, Clone, Copy)]
pub struct Mpsrf {
    pub value: f64,
    /// True when the within-chain covariance needed regularization.
    pub regularized: bool,
}

/// Dimension above which MPSRF is computed on a fixed 50-coordinate
/// projection instead of the full space.
const MPSRF_PROJECTION_LIMIT: usize = 200;
const MPSRF_PROJECTION_DIM: usize = 50;

/// Brooks–Gelman multivariate potential scale reduction factor.
pub fn mpsrf(chains: &[DMatrix<f64>]) -> Result<Mpsrf> {
    if chains.len() < 2 {
        return Err(Error::invalid("MPSRF needs at least two chains"));
    }
    let n = chains[0].nrows();
    let d = chains[0].ncols();
    if n < 2 || d == 0 {
        return Err(Error::invalid("chains must hold at least two samples"));
    }
    for c in chains {
        if c.nrows() != n || c.ncols() != d {
            return Err(Error::dims("chains must share a common shape"));
        }
    }

    // Deterministic coordinate projection for very high dimensions.
    let selected: Vec<usize> = if d > MPSRF_PROJECTION_LIMIT {
        // Simple fixed stride-based pick keeps the projection reproducible.
        let stride = d as f64 / MPSRF_PROJECTION_DIM as f64;
        (0..MPSRF_PROJECTION_DIM)
            .map(|i| ((i as f64 + 0.5) * stride) as usize)
            .collect()
    } else {
        (0..d).collect()
    };
    let dim = selected.len();
    let m = chains.len();

    let mut within = DMatrix::zeros(dim, dim);
    let mut means = DMatrix::zeros(dim, m);
    for (c, chain) in chains.iter().enumerate() {
        let mut mean = DVector::zeros(dim);
        for (r, &col) in selected.iter().enumerate() {
            mean[r] = chain.column(col).sum() / n as f64;
        }
        means.set_column(c, &mean);
        let mut deviation = DVector::zeros(dim);
        for row in 0..n {
            for (r, &col) in selected.iter().enumerate() {
                deviation[r] = chain[(row, col)] - mean[r];
            }
            within.ger(1.0, &deviation, &deviation, 1.0);
        }
    }
    within /= (m * (n - 1)) as f64;

    let grand = means.column_sum() / m as f64;
    // B/n = Φ Φᵀ with columns (mean_c - grand)/√(m-1).
    let mut phi = DMatrix::zeros(dim, m);
    for c in 0..m {
        phi.set_column(c, &((means.column(c) - &grand) / ((m - 1) as f64).sqrt()));
    }

    let trace = within.trace();
    if trace <= 0.0 {
        // All chains constant: either identical (converged trivially) or
        // disjoint (divergent).
        let spread = phi.norm_squared();
        let value = if spread == 0.0 {
            (n as f64 - 1.0) / n as f64
        } else {
            f64::INFINITY
        };
        return Ok(Mpsrf {
            value,
            regularized: true,
        });
    }

    let mut regularized = false;
    let mut w = within.clone();
    let chol = match w.clone().cholesky() {
        Some(c) => c,
        None => {
            regularized = true;
            let bump = 1e-12 * trace / dim as f64;
            for i in 0..dim {
                w[(i, i)] += bump;
            }
            w.clone().cholesky().ok_or_else(|| {
                Error::Numerical("within-chain covariance is not factorizable".into())
            })?
        }
    };

    // λ_max(W⁻¹ Φ Φᵀ) = λ_max(Φᵀ W⁻¹ Φ), an m×m problem.
    let w_inv_phi = chol.solve(&phi);
    let small = phi.transpose() * w_inv_phi;
    let lambda_max = small
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0, f64::max);

    let value = (n as f64 - 1.0) / n as f64 + ((m + 1) as f64 / m as f64) * lambda_max;
    Ok(Mpsrf { value, regularized })
}

/// Pointwise empirical quantile band at the given coverage level, linear
/// interpolation between order statistics.
pub fn quantile_band(samples: &DMatrix<f64>, level: f64) -> Result<(DVector<f64>, DVector<f64>)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!(
            "band level must lie in (0, 1), got {level}"
        )));
    }
    let j = samples.nrows();
    if j == 0 {
        return Err(Error::invalid("no samples to summarize"));
    }
    let d = samples.ncols();
    let lo_p = (1.0 - level) / 2.0;
    let hi_p = 1.0 - lo_p;
    let mut lower = DVector::zeros(d);
    let mut upper = DVector::zeros(d);
    let mut column = vec![0.0; j];
    for c in 0..d {
        for (i, v) in column.iter_mut().enumerate() {
            *v = samples[(i, c)];
        }
        column.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lower[c] = interpolated_quantile(&column, lo_p);
        upper[c] = interpolated_quantile(&column, hi_p);
    }
    Ok((lower, upper))
}

fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Posterior summary of a multi-chain run: pointwise mean, quantile band,
/// and the two convergence metrics.
#[derive(Debug, Clone)]
pub struct ChainSummary {
    pub posterior_mean: DVector<f64>,
    pub lower_band: DVector<f64>,
    pub upper_band: DVector<f64>,
    /// Sum of per-chain ESS estimates (post burn-in).
    pub mean_ess: f64,
    pub mpsrf: f64,
}

pub fn summarize(samples: &ChainSamples, level: f64) -> Result<ChainSummary> {
    let pooled = samples.pooled_u();
    let d = pooled.ncols();
    let mut mean = DVector::zeros(d);
    for c in 0..d {
        mean[c] = pooled.column(c).sum() / pooled.nrows() as f64;
    }
    let (lower, upper) = quantile_band(&pooled, level)?;
    let mut mean_ess = 0.0;
    for chain in &samples.chains {
        mean_ess += ess(&chain.u_after(samples.burn_in))?;
    }
    let post: Vec<DMatrix<f64>> = samples
        .chains
        .iter()
        .map(|c| c.u_after(samples.burn_in))
        .collect();
    let mpsrf_value = if post.len() >= 2 {
        mpsrf(&post)?.value
    } else {
        f64::NAN
    };
    Ok(ChainSummary {
        posterior_mean: mean,
        lower_band: lower,
        upper_band: upper,
        mean_ess,
        mpsrf: mpsrf_value,
    })
}
