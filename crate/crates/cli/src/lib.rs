//! Experiment harness around the SIAC filtering library: configuration,
//! dataset generation, estimator invocation, and artifact emission.

// Validation uses `!(x > 0.0)` so that NaN is rejected along with
// non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod config;
pub mod error;
pub mod experiments;
pub mod signals;

pub use config::{ConfigMap, Estimator};
pub use error::{CliError, CliResult};
pub use experiments::deblur::{run_deblur, DeblurConfig};
pub use experiments::denoise::{run_denoise, DenoiseConfig};
pub use experiments::dg_convergence::{
    compute_convergence, run_dg_convergence, DgConvergenceConfig,
};
pub use experiments::kernel_info::run_kernel_info;
