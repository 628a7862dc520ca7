//! Matrix representation of the SIAC filter on a uniform periodic mesh.
//!
//! Row n of the N×N matrix F holds the filtered local Lagrange basis
//! functions evaluated at node x_n, so that F u are the nodal values of the
//! filtered piecewise polynomial. On a uniform mesh with identical local
//! nodes the matrix is block-circulant: only one block row is integrated
//! directly and the rest follows by cyclic shifting. Entries are exact up to
//! rounding because each refinement subinterval (kernel breakpoints crossed
//! with cell boundaries) carries a Gauss–Legendre rule matching the
//! polynomial degree of the integrand.
//!
//! The same block machinery also evaluates the filtered function at
//! arbitrary per-cell points (`FilterEvaluator`), which is what convergence
//! studies use to measure the filtered error in L2.

use crate::basis::LagrangeBasis;
use crate::error::{Error, Result};
use crate::kernel::{ScaledKernel, SiacKernelSpec};
use crate::mesh::UniformPeriodicMesh;
use crate::quadrature;
use nalgebra::{DMatrix, DVector};

/// Block-circulant filter blocks for one row of evaluation points.
#[derive(Debug, Clone)]
struct FilterBlocks {
    /// Leftmost cell offset covered by the kernel support.
    min_offset: i64,
    /// blocks[t][(p, q)] weighs nodal value q of cell j + min_offset + t in
    /// the filtered value at evaluation point p of cell j.
    blocks: Vec<DMatrix<f64>>,
}

fn build_blocks(
    mesh: &UniformPeriodicMesh,
    kernel: &ScaledKernel,
    eval_points: &[f64],
) -> Result<FilterBlocks> {
    let (a, b) = mesh.domain();
    let h = mesh.cell_width();
    let (_, support) = kernel.support();
    if support > 0.5 * (b - a) + 1e-12 {
        return Err(Error::UnsupportedConfiguration(format!(
            "kernel support {support:.6} exceeds half the domain length {:.6}",
            0.5 * (b - a)
        )));
    }
    let per_cell = mesh.nodes_per_cell();
    let basis = LagrangeBasis::new(mesh.local_nodes());
    // Quadrature order: the integrand is polynomial of degree <= k + ell - 1
    // on each refinement subinterval.
    let quad_pts = (per_cell + kernel.spec().spline_order() as usize).div_ceil(2) + 1;
    let (q_nodes, q_weights) = quadrature::gauss_legendre(quad_pts);

    // Evaluation points live in cell 0 (reference coords in [-1, 1]).
    let cell0_mid = a + 0.5 * h;
    let xs: Vec<f64> = eval_points
        .iter()
        .map(|xi| cell0_mid + 0.5 * h * xi)
        .collect();

    let min_offset = ((xs[0] - support - a) / h).floor() as i64;
    let max_offset = ((xs[xs.len() - 1] + support - a) / h).ceil() as i64 - 1;
    let n_off = (max_offset - min_offset + 1) as usize;
    let mut blocks = vec![DMatrix::zeros(xs.len(), per_cell); n_off];

    let kernel_breaks = kernel.breakpoints();
    let mut basis_vals = vec![0.0; per_cell];
    for (p, &x) in xs.iter().enumerate() {
        for (t, block) in blocks.iter_mut().enumerate() {
            let offset = min_offset + t as i64;
            let cell_lo = a + offset as f64 * h;
            let cell_hi = cell_lo + h;
            let lo = cell_lo.max(x - support);
            let hi = cell_hi.min(x + support);
            if hi <= lo {
                continue;
            }
            // Common refinement: cell window cut by translated kernel knots.
            let mut cuts = vec![lo];
            for tk in &kernel_breaks {
                let y = x - tk;
                if y > lo + 1e-14 * h && y < hi - 1e-14 * h {
                    cuts.push(y);
                }
            }
            cuts.push(hi);
            cuts.sort_by(|u, v| u.partial_cmp(v).unwrap());
            for w in cuts.windows(2) {
                let (ya, yb) = (w[0], w[1]);
                if yb - ya < 1e-15 * h {
                    continue;
                }
                let mid = 0.5 * (ya + yb);
                let half = 0.5 * (yb - ya);
                for (qn, qw) in q_nodes.iter().zip(q_weights.iter()) {
                    let y = mid + half * qn;
                    let kv = kernel.eval(x - y);
                    // Local coordinate of y in the source cell.
                    let xi = 2.0 * (y - cell_lo) / h - 1.0;
                    basis.eval_all(xi, &mut basis_vals);
                    let scale = kv * qw * half;
                    for (q, bv) in basis_vals.iter().enumerate() {
                        block[(p, q)] += scale * bv;
                    }
                }
            }
        }
    }
    Ok(FilterBlocks { min_offset, blocks })
}

fn apply_blocks(
    blocks: &FilterBlocks,
    cells: usize,
    per_cell: usize,
    rows_per_cell: usize,
    u: &DVector<f64>,
) -> DVector<f64> {
    let mut out = DVector::zeros(cells * rows_per_cell);
    for j in 0..cells {
        for (t, block) in blocks.blocks.iter().enumerate() {
            let src = (j as i64 + blocks.min_offset + t as i64).rem_euclid(cells as i64) as usize;
            let u_block = u.rows(src * per_cell, per_cell);
            let mut out_block = out.rows_mut(j * rows_per_cell, rows_per_cell);
            out_block.gemv(1.0, block, &u_block, 1.0);
        }
    }
    out
}

/// N×N SIAC filter matrix on a uniform periodic mesh, stored as one block
/// row plus the circulant shift structure.
#[derive(Debug, Clone)]
pub struct FilterMatrix {
    mesh: UniformPeriodicMesh,
    kernel: ScaledKernel,
    blocks: FilterBlocks,
}

impl FilterMatrix {
    /// Build the filter matrix with scaling H set to the mesh cell width.
    pub fn build(mesh: &UniformPeriodicMesh, spec: &SiacKernelSpec) -> Result<Self> {
        let kernel = ScaledKernel::new(spec.clone(), mesh.cell_width())?;
        let blocks = build_blocks(mesh, &kernel, mesh.local_nodes())?;
        Ok(Self {
            mesh: mesh.clone(),
            kernel,
            blocks,
        })
    }

    pub fn size(&self) -> usize {
        self.mesh.num_nodes()
    }

    pub fn mesh(&self) -> &UniformPeriodicMesh {
        &self.mesh
    }

    pub fn kernel(&self) -> &ScaledKernel {
        &self.kernel
    }

    /// F u, exploiting the block-circulant storage.
    pub fn apply(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != self.size() {
            return Err(Error::dims(format!(
                "filter expects a vector of length {}, got {}",
                self.size(),
                u.len()
            )));
        }
        let per_cell = self.mesh.nodes_per_cell();
        Ok(apply_blocks(
            &self.blocks,
            self.mesh.cells(),
            per_cell,
            per_cell,
            u,
        ))
    }

    /// Materialize the dense N×N matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        let cells = self.mesh.cells();
        let per_cell = self.mesh.nodes_per_cell();
        let mut f = DMatrix::zeros(n, n);
        for j in 0..cells {
            for (t, block) in self.blocks.blocks.iter().enumerate() {
                let src = (j as i64 + self.blocks.min_offset + t as i64).rem_euclid(cells as i64)
                    as usize;
                for p in 0..per_cell {
                    for q in 0..per_cell {
                        f[(j * per_cell + p, src * per_cell + q)] += block[(p, q)];
                    }
                }
            }
        }
        f
    }
}

/// Evaluates the SIAC-filtered piecewise polynomial at a fixed set of
/// per-cell reference points (the same points in every cell).
#[derive(Debug, Clone)]
pub struct FilterEvaluator {
    mesh: UniformPeriodicMesh,
    points: Vec<f64>,
    blocks: FilterBlocks,
}

impl FilterEvaluator {
    /// `local_points` are reference coordinates in [-1, 1], identical per cell.
    pub fn build(
        mesh: &UniformPeriodicMesh,
        spec: &SiacKernelSpec,
        local_points: &[f64],
    ) -> Result<Self> {
        if local_points.is_empty() {
            return Err(Error::invalid("need at least one evaluation point"));
        }
        let mut sorted = local_points.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let kernel = ScaledKernel::new(spec.clone(), mesh.cell_width())?;
        let blocks = build_blocks(mesh, &kernel, &sorted)?;
        Ok(Self {
            mesh: mesh.clone(),
            points: sorted,
            blocks,
        })
    }

    /// Global evaluation points, cell by cell.
    pub fn points(&self) -> Vec<f64> {
        let (a, _) = self.mesh.domain();
        let h = self.mesh.cell_width();
        let mut xs = Vec::with_capacity(self.mesh.cells() * self.points.len());
        for j in 0..self.mesh.cells() {
            let mid = a + (j as f64 + 0.5) * h;
            for xi in &self.points {
                xs.push(mid + 0.5 * h * xi);
            }
        }
        xs
    }

    /// Filtered values at every evaluation point, from nodal data u.
    pub fn apply(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != self.mesh.num_nodes() {
            return Err(Error::dims(format!(
                "filter evaluator expects a vector of length {}, got {}",
                self.mesh.num_nodes(),
                u.len()
            )));
        }
        Ok(apply_blocks(
            &self.blocks,
            self.mesh.cells(),
            self.mesh.nodes_per_cell(),
            self.points.len(),
            u,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::NodeLayout;
    use approx::assert_abs_diff_eq;

    fn mesh(j: usize, k: usize, layout: NodeLayout) -> UniformPeriodicMesh {
        UniformPeriodicMesh::new(0.0, 1.0, j, k, layout).unwrap()
    }

    #[test]
    fn box_kernel_on_piecewise_constants_is_identity() {
        let m = mesh(8, 0, NodeLayout::EquidistantInCell);
        let spec = SiacKernelSpec::build(0, 1).unwrap();
        let f = FilterMatrix::build(&m, &spec).unwrap().to_dense();
        let id = DMatrix::<f64>::identity(8, 8);
        assert!((f - id).amax() < 1e-13);
    }

    #[test]
    fn rows_sum_to_one() {
        // J = 8 with k = 3 is excluded: its kernel support 5h = 5/8 exceeds
        // the half-domain precondition.
        for &(j, k) in &[(8usize, 1usize), (8, 2), (16, 1), (16, 2), (16, 3)] {
            let m = mesh(j, k, NodeLayout::GaussLegendre);
            let spec = SiacKernelSpec::build(2 * k as u32, k as u32 + 1).unwrap();
            let f = FilterMatrix::build(&m, &spec).unwrap();
            let ones = DVector::from_element(f.size(), 1.0);
            let filtered = f.apply(&ones).unwrap();
            for v in filtered.iter() {
                assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn matches_quadrature_filter_on_global_polynomials() {
        // A global polynomial of degree <= k is its own interpolant, so away
        // from the periodic wrap the matrix must reproduce the continuous
        // filter exactly.
        let m = mesh(16, 2, NodeLayout::GaussLegendre);
        let spec = SiacKernelSpec::build(2, 2).unwrap();
        let fm = FilterMatrix::build(&m, &spec).unwrap();
        let kernel = fm.kernel().clone();
        let support = kernel.support().1;
        for mom in 0..=2usize {
            let u = m.nodal_values(|x| x.powi(mom as i32));
            let filtered = fm.apply(&u).unwrap();
            for (n, &x) in m.nodes().iter().enumerate() {
                if x - support < 0.0 || x + support > 1.0 {
                    continue; // periodic wrap differs from the line integral
                }
                let oracle = kernel.filter(|y| y.powi(mom as i32), x, 8);
                assert_abs_diff_eq!(filtered[n], oracle, epsilon = 1e-12);
                // Moment conditions: degree <= r reproduced exactly.
                assert_abs_diff_eq!(filtered[n], x.powi(mom as i32), epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn dense_assembly_matches_independent_row_integration() {
        // Rebuild every row from scratch (no circulant shifting) and compare.
        let m = mesh(6, 1, NodeLayout::GaussLegendre);
        let spec = SiacKernelSpec::build(2, 2).unwrap();
        let fm = FilterMatrix::build(&m, &spec).unwrap();
        let dense = fm.to_dense();
        let kernel = fm.kernel();
        let n = m.num_nodes();
        let per_cell = m.nodes_per_cell();
        let basis = LagrangeBasis::new(m.local_nodes());
        let h = m.cell_width();
        let support = kernel.support().1;
        let mut slow = DMatrix::zeros(n, n);
        for row in 0..n {
            let x = m.nodes()[row];
            // Integrate against each basis function over every periodic image
            // of its cell that intersects the kernel support, splitting at
            // the translated kernel breakpoints so the quadrature is exact.
            for cell in 0..m.cells() {
                for image in -1..=1i64 {
                    let shift = image as f64 * 1.0; // domain length
                    let (lo_c, hi_c) = m.cell_bounds(cell);
                    let lo = (lo_c + shift).max(x - support);
                    let hi = (hi_c + shift).min(x + support);
                    if hi <= lo {
                        continue;
                    }
                    let mut cuts = vec![lo];
                    for t in kernel.breakpoints() {
                        let y = x - t;
                        if y > lo && y < hi {
                            cuts.push(y);
                        }
                    }
                    cuts.push(hi);
                    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    for q in 0..per_cell {
                        let mut val = 0.0;
                        for piece in cuts.windows(2) {
                            val += quadrature::integrate(
                                |y| {
                                    let mut basis_vals = vec![0.0; per_cell];
                                    let xi = 2.0 * (y - lo_c - shift) / h - 1.0;
                                    basis.eval_all(xi, &mut basis_vals);
                                    kernel.eval(x - y) * basis_vals[q]
                                },
                                piece[0],
                                piece[1],
                                16,
                            );
                        }
                        slow[(row, cell * per_cell + q)] += val;
                    }
                }
            }
        }
        assert!((dense - slow).amax() < 1e-12);
    }

    #[test]
    fn shift_structure_is_block_circulant() {
        let m = mesh(8, 2, NodeLayout::GaussLegendre);
        let spec = SiacKernelSpec::build(4, 3).unwrap();
        let f = FilterMatrix::build(&m, &spec).unwrap().to_dense();
        let pc = m.nodes_per_cell();
        for bi in 0..8usize {
            for bj in 0..8usize {
                // Block (bi, bj) must equal block (0, (bj - bi) mod J).
                let rj = (bj + 8 - bi) % 8;
                for p in 0..pc {
                    for q in 0..pc {
                        assert_abs_diff_eq!(
                            f[(bi * pc + p, bj * pc + q)],
                            f[(p, rj * pc + q)],
                            epsilon = 1e-13
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn oversized_kernel_support_is_rejected() {
        let m = mesh(4, 1, NodeLayout::GaussLegendre);
        // Support (6+4)/2 * h = 5/4 > 1/2.
        let spec = SiacKernelSpec::build(6, 4).unwrap();
        assert!(matches!(
            FilterMatrix::build(&m, &spec),
            Err(Error::UnsupportedConfiguration(_))
        ));
    }

    #[test]
    fn white_noise_total_variation_drops() {
        use rand::{Rng, SeedableRng};
        let m = mesh(25, 3, NodeLayout::EquidistantInCell);
        let spec = SiacKernelSpec::build(6, 4).unwrap();
        let f = FilterMatrix::build(&m, &spec).unwrap();
        let tv = |v: &DVector<f64>| -> f64 { (1..v.len()).map(|i| (v[i] - v[i - 1]).abs()).sum() };
        for seed in 0..10u64 {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let noise = DVector::from_fn(f.size(), |_, _| {
                rng.sample::<f64, _>(rand_distr::StandardNormal)
            });
            let filtered = f.apply(&noise).unwrap();
            assert!(tv(&filtered) < tv(&noise));
        }
    }

    #[test]
    fn evaluator_matches_matrix_at_the_nodes() {
        let m = mesh(12, 2, NodeLayout::GaussLegendre);
        let spec = SiacKernelSpec::build(4, 3).unwrap();
        let fm = FilterMatrix::build(&m, &spec).unwrap();
        let ev = FilterEvaluator::build(&m, &spec, m.local_nodes()).unwrap();
        let u = m.nodal_values(|x| (2.0 * std::f64::consts::PI * x).sin());
        let a = fm.apply(&u).unwrap();
        let b = ev.apply(&u).unwrap();
        assert!((a - b).amax() < 1e-13);
    }
}
