//! Filter-matrix accuracy: agreement with the quadrature reference filter
//! and the superconvergent decay of the filtering residual.

use bayes_siac::filter::FilterMatrix;
use bayes_siac::kernel::SiacKernelSpec;
use bayes_siac::mesh::{NodeLayout, UniformPeriodicMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::f64::consts::PI;

/// Least-squares slope of log2(error) against log2(J).
fn observed_order(js: &[usize], errors: &[f64]) -> f64 {
    let n = js.len() as f64;
    let xs: Vec<f64> = js.iter().map(|j| (*j as f64).log2()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    -cov / var
}

#[test]
fn matrix_agrees_with_quadrature_reference_on_smooth_data() {
    // On a fine mesh the interpolation residual sits far below the target
    // tolerance, so the matrix route and the continuous convolution of the
    // underlying trigonometric polynomial must coincide at every node.
    let mesh = UniformPeriodicMesh::new(0.0, 1.0, 64, 3, NodeLayout::GaussLegendre).unwrap();
    let spec = SiacKernelSpec::build(6, 4).unwrap();
    let fm = FilterMatrix::build(&mesh, &spec).unwrap();
    let kernel = fm.kernel().clone();
    let mut rng = ChaCha12Rng::seed_from_u64(99);
    for _ in 0..5 {
        let a1: f64 = rng.random_range(-1.0..1.0);
        let b1: f64 = rng.random_range(-1.0..1.0);
        let a2: f64 = rng.random_range(-0.5..0.5);
        let b2: f64 = rng.random_range(-0.5..0.5);
        let c: f64 = rng.random_range(-1.0..1.0);
        let u = move |x: f64| {
            c + a1 * (2.0 * PI * x).sin()
                + b1 * (2.0 * PI * x).cos()
                + a2 * (4.0 * PI * x).sin()
                + b2 * (4.0 * PI * x).cos()
        };
        let nodal = mesh.nodal_values(u);
        let filtered = fm.apply(&nodal).unwrap();
        let mut worst: f64 = 0.0;
        for (i, &x) in mesh.nodes().iter().enumerate() {
            let reference = kernel.filter(u, x, 20);
            worst = worst.max((filtered[i] - reference).abs());
        }
        assert!(worst <= 1e-9, "node-wise mismatch {worst}");
    }
}

#[test]
fn high_order_kernel_reaches_its_design_rate() {
    // K^(7,4) on cubic data: the residual must decay at order >= r + 0.5.
    // The support 5h must stay within half the domain, so J >= 10.
    let u = |x: f64| (2.0 * PI * x).sin();
    let js = [12usize, 24, 48];
    let spec = SiacKernelSpec::build(6, 4).unwrap();
    let mut errors = Vec::new();
    for &j in &js {
        let mesh = UniformPeriodicMesh::new(0.0, 1.0, j, 3, NodeLayout::GaussLegendre).unwrap();
        let fm = FilterMatrix::build(&mesh, &spec).unwrap();
        let nodal = mesh.nodal_values(u);
        let filtered = fm.apply(&nodal).unwrap();
        errors.push(mesh.discrete_l2_norm(&(nodal - filtered)));
    }
    let order = observed_order(&js, &errors);
    assert!(
        order >= 6.5,
        "observed order {order:.2} below 6.5 (errors {errors:?})"
    );
}

#[test]
fn filtering_residual_superconverges() {
    let u = |x: f64| (2.0 * PI * x).sin() + 0.5 * (4.0 * PI * x).cos().powi(2) + 0.5;
    for k in [1usize, 2] {
        let js = [16usize, 32, 64, 128];
        let mut errors = Vec::new();
        for &j in &js {
            let mesh = UniformPeriodicMesh::new(0.0, 1.0, j, k, NodeLayout::GaussLegendre).unwrap();
            let spec = SiacKernelSpec::build(2 * k as u32, k as u32 + 1).unwrap();
            let fm = FilterMatrix::build(&mesh, &spec).unwrap();
            let nodal = mesh.nodal_values(u);
            let filtered = fm.apply(&nodal).unwrap();
            errors.push(mesh.discrete_l2_norm(&(nodal - filtered)));
        }
        let order = observed_order(&js, &errors);
        let target = 2.0 * k as f64 + 0.5;
        assert!(
            order >= target,
            "k={k}: observed order {order:.2}, need >= {target} (errors {errors:?})"
        );
    }
}
