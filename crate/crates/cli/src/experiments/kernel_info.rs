//! Kernel inspection: shifts, coefficients, support, and moment residuals as
//! CSV on standard output.

use crate::error::CliResult;
use bayes_siac::SiacKernelSpec;
use std::io::Write;

pub fn run_kernel_info(r: u32, ell: u32, out: &mut impl Write) -> CliResult<()> {
    let spec =
        SiacKernelSpec::build(r, ell).map_err(|e| crate::error::CliError::config(e.to_string()))?;
    writeln!(out, "gamma,shift,coefficient")?;
    for (g, (shift, coeff)) in spec
        .shifts()
        .iter()
        .zip(spec.coefficients().iter())
        .enumerate()
    {
        writeln!(out, "{g},{shift},{coeff}")?;
    }
    writeln!(out)?;
    writeln!(out, "property,value")?;
    writeln!(out, "num_splines,{}", spec.num_splines())?;
    writeln!(out, "spline_order,{}", spec.spline_order())?;
    writeln!(out, "support_half_width,{}", spec.support_half_width())?;
    writeln!(out, "moment_residual,{}", spec.moment_residual())?;
    Ok(())
}
