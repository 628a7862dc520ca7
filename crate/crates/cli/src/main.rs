use bayes_siac_cli::config::ConfigMap;
use bayes_siac_cli::error::CliResult;
use bayes_siac_cli::experiments::{deblur, denoise, dg_convergence, kernel_info};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "bayes-siac",
    version,
    about = "SIAC filtering experiments: denoising, DG post-processing, and image deblurring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Estimator: map, gibbs, or filter.
    #[arg(long)]
    estimator: Option<String>,
    /// Samples per chain (gibbs).
    #[arg(long)]
    samples: Option<usize>,
    /// Number of chains (gibbs).
    #[arg(long)]
    chains: Option<usize>,
    /// Additional key=value overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    ///1D signal denoising with the Bayesian SIAC filter.
    Denoise(CommonArgs),
    /// 2D image deblurring through a separable Gaussian blur.
    Deblur {
        #[command(flatten)]
        common: CommonArgs,
        /// Square PGM input image (omit for the built-in synthetic image).
        #[arg(long)]
        image: Option<PathBuf>,
    },
    /// DG post-processing convergence study.
    DgConvergence(CommonArgs),
    /// Print kernel shifts, coefficients, support, and moment residuals.
    KernelInfo {
        /// Number of vanishing moments r (the kernel uses r+1 B-splines).
        #[arg(long)]
        r: u32,
        /// B-spline order.
        #[arg(long)]
        ell: u32,
    },
}

fn build_config(common: &CommonArgs) -> CliResult<ConfigMap> {
    let mut cfg = match &common.config {
        Some(path) => ConfigMap::from_file(path)?,
        None => ConfigMap::new(),
    };
    for pair in &common.set {
        cfg.set_pair(pair)?;
    }
    if let Some(seed) = common.seed {
        cfg.set("seed", &seed.to_string());
    }
    if let Some(out) = &common.out {
        cfg.set("out", &out.display().to_string());
    }
    if let Some(est) = &common.estimator {
        cfg.set("estimator", est);
    }
    if let Some(samples) = common.samples {
        cfg.set("samples", &samples.to_string());
    }
    if let Some(chains) = common.chains {
        cfg.set("chains", &chains.to_string());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Denoise(common) => {
            let mut cfg = build_config(&common)?;
            let config = denoise::DenoiseConfig::from_map(&mut cfg)?;
            let metrics = denoise::run_denoise(&config)?;
            for (key, value) in &metrics.0 {
                println!("{key} = {value}");
            }
            Ok(())
        }
        Command::Deblur { common, image } => {
            let mut cfg = build_config(&common)?;
            if let Some(image) = &image {
                cfg.set("image", &image.display().to_string());
            }
            let config = deblur::DeblurConfig::from_map(&mut cfg)?;
            let metrics = deblur::run_deblur(&config)?;
            for (key, value) in &metrics.0 {
                println!("{key} = {value}");
            }
            Ok(())
        }
        Command::DgConvergence(common) => {
            let mut cfg = build_config(&common)?;
            let config = dg_convergence::DgConvergenceConfig::from_map(&mut cfg)?;
            let metrics = dg_convergence::run_dg_convergence(&config)?;
            for (key, value) in &metrics.0 {
                println!("{key} = {value}");
            }
            Ok(())
        }
        Command::KernelInfo { r, ell } => {
            kernel_info::run_kernel_info(r, ell, &mut std::io::stdout())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
