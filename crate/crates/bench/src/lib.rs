//! Shared fixtures for the benchmark suite.

use bayes_siac::{
    make_dataset, BayesSiacModel, FilterMatrix, HyperPriors, LinearOperator, NodeLayout,
    SiacKernelSpec, UniformPeriodicMesh,
};
use nalgebra::DVector;
use std::f64::consts::PI;

pub fn denoise_truth(x: f64) -> f64 {
    (2.0 * PI * x).sin() + 0.5 * (4.0 * PI * x).cos().powi(2) + 0.5
}

/// Mesh, filter, and truth vector of the standard denoising layout for a
/// given number of nodes (k = 3, equidistant nodes, kernel with r = 6,
/// ℓ = 4).
pub fn denoise_setup(n: usize) -> (UniformPeriodicMesh, FilterMatrix, DVector<f64>) {
    let mesh = UniformPeriodicMesh::new(0.0, 1.0, n / 4, 3, NodeLayout::EquidistantInCell).unwrap();
    let spec = SiacKernelSpec::build(6, 4).unwrap();
    let filter = FilterMatrix::build(&mesh, &spec).unwrap();
    let truth = mesh.nodal_values(denoise_truth);
    (mesh, filter, truth)
}

/// Denoising model with data generated at the standard noise level.
pub fn denoise_model(n: usize, seed: u64) -> BayesSiacModel {
    let (_, filter, truth) = denoise_setup(n);
    let dataset = make_dataset(&LinearOperator::identity(n), &truth, 5e-2, seed).unwrap();
    BayesSiacModel::new(
        LinearOperator::identity(n),
        dataset.data,
        &filter,
        HyperPriors::default(),
    )
    .unwrap()
}
