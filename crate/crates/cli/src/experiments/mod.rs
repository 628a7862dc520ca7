pub mod deblur;
pub mod denoise;
pub mod dg_convergence;
pub mod kernel_info;
