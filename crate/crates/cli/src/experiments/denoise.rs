//! 1D signal denoising: recover a smooth periodic signal from noisy direct
//! observations (A = I) with the SIAC prior.

use crate::artifacts::{Manifest, Metrics, OutputDir, Stopwatch};
use crate::config::{ConfigMap, Estimator};
use crate::error::{CliError, CliResult};
use crate::signals;
use bayes_siac::diagnostics::{self, rel_l2_error};
use bayes_siac::io::write_csv_columns;
use bayes_siac::{
    bcd_map, make_dataset, run_gibbs, BayesSiacModel, BcdOptions, FilterMatrix, GibbsOptions,
    HyperPriors, LinearOperator, NodeLayout, SiacKernelSpec, SolverKind, UniformPeriodicMesh,
};
use std::path::PathBuf;

#[derive(Debug, Clone)]
pub struct DenoiseConfig {
    pub n: usize,
    pub degree: usize,
    pub layout: NodeLayout,
    pub kernel_r: u32,
    pub kernel_ell: u32,
    pub sigma2: f64,
    pub priors: HyperPriors,
    pub estimator: Estimator,
    pub max_iterations: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub samples: usize,
    pub chains: usize,
    pub burn_in_fraction: f64,
    pub band_level: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl DenoiseConfig {
    pub fn from_map(cfg: &mut ConfigMap) -> CliResult<Self> {
        let layout = match cfg.get_str("layout", "equidistant").as_str() {
            "equidistant" => NodeLayout::EquidistantInCell,
            "gauss-legendre" | "gl" => NodeLayout::GaussLegendre,
            other => {
                return Err(CliError::config(format!(
                    "layout must be 'equidistant' or 'gauss-legendre', got '{other}'"
                )))
            }
        };
        let config = Self {
            n: cfg.get_usize("n", 100)?,
            degree: cfg.get_usize("k", 3)?,
            layout,
            kernel_r: cfg.get_u64("kernel_r", 6)? as u32,
            kernel_ell: cfg.get_u64("kernel_ell", 4)? as u32,
            sigma2: cfg.get_f64("sigma2", 5e-2)?,
            priors: HyperPriors {
                c_alpha: cfg.get_f64("c_alpha", 1.0)?,
                d_alpha: cfg.get_f64("d_alpha", 1e-3)?,
                c_beta: cfg.get_f64("c_beta", 1.0)?,
                d_beta: cfg.get_f64("d_beta", 1e-3)?,
            },
            estimator: Estimator::parse(&cfg.get_str("estimator", "map"))?,
            max_iterations: cfg.get_usize("max_iterations", 1000)?,
            rel_tol: cfg.get_f64("rel_tol", 1e-4)?,
            abs_tol: cfg.get_f64("abs_tol", 1e-8)?,
            samples: cfg.get_usize("samples", 10_000)?,
            chains: cfg.get_usize("chains", 4)?,
            burn_in_fraction: cfg.get_f64("burn_in", 0.10)?,
            band_level: cfg.get_f64("band_level", 0.90)?,
            seed: cfg.get_u64("seed", 1)?,
            out: PathBuf::from(cfg.get_str("out", "out/denoise")),
        };
        cfg.finish()?;
        if config.n == 0 || !config.n.is_multiple_of(config.degree + 1) {
            return Err(CliError::config(format!(
                "n = {} must be a positive multiple of k+1 = {}",
                config.n,
                config.degree + 1
            )));
        }
        if !(config.sigma2 > 0.0) {
            return Err(CliError::config("sigma2 must be positive"));
        }
        Ok(config)
    }

    fn record(&self, manifest: &mut Manifest) {
        manifest.record("n", self.n);
        manifest.record("k", self.degree);
        manifest.record(
            "layout",
            match self.layout {
                NodeLayout::EquidistantInCell => "equidistant",
                NodeLayout::GaussLegendre => "gauss-legendre",
            },
        );
        manifest.record("kernel_r", self.kernel_r);
        manifest.record("kernel_ell", self.kernel_ell);
        manifest.record("sigma2", self.sigma2);
        manifest.record("c_alpha", self.priors.c_alpha);
        manifest.record("d_alpha", self.priors.d_alpha);
        manifest.record("c_beta", self.priors.c_beta);
        manifest.record("d_beta", self.priors.d_beta);
        manifest.record("estimator", self.estimator.as_str());
        manifest.record("max_iterations", self.max_iterations);
        manifest.record("rel_tol", self.rel_tol);
        manifest.record("abs_tol", self.abs_tol);
        manifest.record("samples", self.samples);
        manifest.record("chains", self.chains);
        manifest.record("burn_in", self.burn_in_fraction);
        manifest.record("band_level", self.band_level);
        manifest.record("out", self.out.display());
    }
}

pub fn run_denoise(config: &DenoiseConfig) -> CliResult<Metrics> {
    let out = OutputDir::create(&config.out)?;
    let mut manifest = Manifest::new("denoise", config.seed);
    config.record(&mut manifest);
    let mut metrics = Metrics::default();
    let mut watch = Stopwatch::start();

    let cells = config.n / (config.degree + 1);
    let mesh = UniformPeriodicMesh::new(0.0, 1.0, cells, config.degree, config.layout)?;
    let spec = SiacKernelSpec::build(config.kernel_r, config.kernel_ell)?;
    let filter = FilterMatrix::build(&mesh, &spec)?;
    manifest
        .timings_s
        .insert("build_filter".into(), watch.lap());

    let truth = mesh.nodal_values(signals::denoise_truth);
    let dataset = make_dataset(
        &LinearOperator::identity(config.n),
        &truth,
        config.sigma2,
        config.seed,
    )?;
    let filtered = filter.apply(&dataset.data)?;

    let xs: Vec<f64> = mesh.nodes().to_vec();
    write_csv_columns(out.path("truth.csv"), "x,value", &[&xs, truth.as_slice()])?;
    write_csv_columns(
        out.path("data.csv"),
        "x,value",
        &[&xs, dataset.data.as_slice()],
    )?;
    write_csv_columns(
        out.path("filtered.csv"),
        "x,value",
        &[&xs, filtered.as_slice()],
    )?;

    metrics.put("rel_l2_data", rel_l2_error(&dataset.data, &truth)?);
    metrics.put("rel_l2_filtered", rel_l2_error(&filtered, &truth)?);
    manifest.timings_s.insert("setup".into(), watch.lap());

    if config.estimator != Estimator::Filter {
        let model = BayesSiacModel::new(
            LinearOperator::identity(config.n),
            dataset.data.clone(),
            &filter,
            config.priors,
        )?;
        let solver = SolverKind::for_problem_size(config.n);

        match config.estimator {
            Estimator::Map => {
                let opts = BcdOptions {
                    max_iterations: config.max_iterations,
                    rel_tol: config.rel_tol,
                    abs_tol: config.abs_tol,
                    solver,
                    ..BcdOptions::default()
                };
                let result = bcd_map(&model, &opts)?;
                write_csv_columns(out.path("map.csv"), "x,value", &[&xs, result.u.as_slice()])?;
                let iters: Vec<f64> = (1..=result.energy_history.len())
                    .map(|i| i as f64)
                    .collect();
                write_csv_columns(
                    out.path("energy.csv"),
                    "iteration,energy",
                    &[&iters, &result.energy_history],
                )?;
                metrics.put("rel_l2_map", rel_l2_error(&result.u, &truth)?);
                metrics.put("alpha_map", result.alpha);
                metrics.put("beta_map", result.beta);
                metrics.put("map_iterations", result.iterations as f64);
                metrics.put("map_converged", if result.converged { 1.0 } else { 0.0 });
                manifest.timings_s.insert("map".into(), watch.lap());
            }
            Estimator::Gibbs => {
                let opts = GibbsOptions {
                    chains: config.chains,
                    burn_in_fraction: config.burn_in_fraction,
                    solver,
                    ..GibbsOptions::new(config.samples, config.seed)
                };
                let samples = run_gibbs(&model, &opts)?;
                let sampling_time = watch.lap();
                manifest.timings_s.insert("gibbs".into(), sampling_time);

                let summary = diagnostics::summarize(&samples, config.band_level)?;
                write_csv_columns(
                    out.path("mean.csv"),
                    "x,value",
                    &[&xs, summary.posterior_mean.as_slice()],
                )?;
                write_csv_columns(
                    out.path("band.csv"),
                    "x,lower,upper",
                    &[
                        &xs,
                        summary.lower_band.as_slice(),
                        summary.upper_band.as_slice(),
                    ],
                )?;
                for (c, chain) in samples.chains.iter().enumerate() {
                    let rows = chain.u.nrows();
                    let mut header = String::from("sampleIndex,alpha,beta");
                    for i in 1..=chain.u.ncols() {
                        header.push_str(&format!(",u{i}"));
                    }
                    let index: Vec<f64> = (1..=rows).map(|i| i as f64).collect();
                    let mut columns: Vec<Vec<f64>> =
                        vec![index, chain.alpha.clone(), chain.beta.clone()];
                    for col in 0..chain.u.ncols() {
                        columns.push(chain.u.column(col).iter().copied().collect());
                    }
                    let refs: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
                    write_csv_columns(out.path(&format!("chain_{c}.csv")), &header, &refs)?;
                }

                let coverage = summary
                    .lower_band
                    .iter()
                    .zip(summary.upper_band.iter())
                    .zip(truth.iter())
                    .filter(|((lo, hi), t)| *lo <= *t && *t <= *hi)
                    .count() as f64
                    / config.n as f64;

                metrics.put(
                    "rel_l2_mean",
                    rel_l2_error(&summary.posterior_mean, &truth)?,
                );
                metrics.put("mean_ess", summary.mean_ess);
                metrics.put("mpsrf", summary.mpsrf);
                metrics.put("mpsrf_minus_one", summary.mpsrf - 1.0);
                metrics.put("ess_per_second", summary.mean_ess / sampling_time.max(1e-9));
                metrics.put("band_coverage", coverage);
                manifest.timings_s.insert("summary".into(), watch.lap());
            }
            Estimator::Filter => unreachable!(),
        }
    }

    manifest.timings_s.insert("total_tail".into(), watch.lap());
    out.write_json("manifest.json", &manifest)?;
    out.write_json("metrics.json", &metrics)?;
    Ok(metrics)
}
