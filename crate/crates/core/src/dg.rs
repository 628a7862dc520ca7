//! Nodal discontinuous Galerkin solver for 1D linear advection.
//!
//! Solves ∂ₜu + ∂ₓu = 0 on a periodic interval with J uniform cells and k+1
//! Gauss–Legendre nodes per cell. The mass matrix is diagonal on GL nodes
//! (the k+1-point rule integrates products of degree-k polynomials exactly),
//! interfaces couple through the full-upwind flux (left state for unit
//! speed), and time stepping is classical fourth-order Runge–Kutta with the
//! final step truncated to land on T exactly.

use crate::basis::LagrangeBasis;
use crate::error::{Error, Result};
use crate::mesh::{NodeLayout, UniformPeriodicMesh};
use crate::quadrature;
use nalgebra::{DMatrix, DVector};

/// Piecewise-polynomial DG solution: nodal values on a Gauss–Legendre mesh.
#[derive(Debug, Clone)]
pub struct DgSolution {
    pub mesh: UniformPeriodicMesh,
    /// Nodal values, cell by cell, length J(k+1).
    pub values: DVector<f64>,
    pub time: f64,
}

/// Semidiscrete nodal DG operator for unit-speed advection.
struct DgOperator {
    cells: usize,
    per_cell: usize,
    two_over_h: f64,
    /// Volume term M̂⁻¹ Ŝ = diag(1/w) Dᵀ diag(w).
    volume: DMatrix<f64>,
    /// Basis values at the right cell edge (left state extraction).
    edge_right: DVector<f64>,
    /// M̂⁻¹ lift vectors at both edges.
    lift_left: DVector<f64>,
    lift_right: DVector<f64>,
}

impl DgOperator {
    fn new(mesh: &UniformPeriodicMesh) -> Self {
        let per_cell = mesh.nodes_per_cell();
        let basis = LagrangeBasis::new(mesh.local_nodes());
        let weights = mesh.local_weights();
        let diff = basis.diff_matrix();
        let mut volume = DMatrix::zeros(per_cell, per_cell);
        for q in 0..per_cell {
            for p in 0..per_cell {
                volume[(q, p)] = diff[(p, q)] * weights[p] / weights[q];
            }
        }
        let mut edge_right = DVector::zeros(per_cell);
        let mut edge_left = DVector::zeros(per_cell);
        basis.eval_all(1.0, edge_right.as_mut_slice());
        basis.eval_all(-1.0, edge_left.as_mut_slice());
        let lift_right = DVector::from_fn(per_cell, |p, _| edge_right[p] / weights[p]);
        let lift_left = DVector::from_fn(per_cell, |p, _| edge_left[p] / weights[p]);
        Self {
            cells: mesh.cells(),
            per_cell,
            two_over_h: 2.0 / mesh.cell_width(),
            volume,
            edge_right,
            lift_left,
            lift_right,
        }
    }

    /// du/dt for the current nodal state.
    fn rhs(&self, u: &DVector<f64>, out: &mut DVector<f64>) {
        let pc = self.per_cell;
        // Upwind traces: the state entering each interface from its left.
        let mut left_trace = vec![0.0; self.cells];
        for (j, trace) in left_trace.iter_mut().enumerate() {
            let cell = u.rows(j * pc, pc);
            *trace = self.edge_right.dot(&cell);
        }
        for j in 0..self.cells {
            let cell = u.rows(j * pc, pc);
            let upstream = left_trace[(j + self.cells - 1) % self.cells];
            let own_right = left_trace[j];
            let mut out_cell = out.rows_mut(j * pc, pc);
            out_cell.gemv(self.two_over_h, &self.volume, &cell, 0.0);
            out_cell.axpy(-self.two_over_h * own_right, &self.lift_right, 1.0);
            out_cell.axpy(self.two_over_h * upstream, &self.lift_left, 1.0);
        }
    }
}

/// Advance the nodal DG discretization of ∂ₜu + ∂ₓu = 0 on (0, 1) to time T.
pub fn dg_solve<F: Fn(f64) -> f64>(
    cells: usize,
    degree: usize,
    t_final: f64,
    cfl: f64,
    initial: F,
) -> Result<DgSolution> {
    if cells < 2 {
        return Err(Error::invalid("DG mesh needs at least two cells"));
    }
    if degree > 6 {
        return Err(Error::invalid("DG degree is limited to k <= 6"));
    }
    if !(t_final > 0.0) || !(cfl > 0.0) {
        return Err(Error::invalid("final time and CFL number must be positive"));
    }
    let mesh = UniformPeriodicMesh::new(0.0, 1.0, cells, degree, NodeLayout::GaussLegendre)?;
    let op = DgOperator::new(&mesh);
    let mut u = mesh.nodal_values(&initial);

    let dt_max = cfl * mesh.cell_width();
    let steps = (t_final / dt_max).ceil() as usize;
    let mut t = 0.0;

    let n = u.len();
    let mut k1 = DVector::zeros(n);
    let mut k2 = DVector::zeros(n);
    let mut k3 = DVector::zeros(n);
    let mut k4 = DVector::zeros(n);

    for step in 0..steps {
        let dt = if step + 1 == steps {
            t_final - t
        } else {
            dt_max
        };
        op.rhs(&u, &mut k1);
        op.rhs(&(&u + 0.5 * dt * &k1), &mut k2);
        op.rhs(&(&u + 0.5 * dt * &k2), &mut k3);
        op.rhs(&(&u + dt * &k3), &mut k4);
        u += (dt / 6.0) * (&k1 + 2.0 * &k2 + 2.0 * &k3 + k4.clone());
        t += dt;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "DG integration became unstable at t = {t:.6} (step {step})"
            )));
        }
    }

    Ok(DgSolution {
        mesh,
        values: u,
        time: t_final,
    })
}

/// L2 error of the DG solution against a reference function, integrated
/// elementwise with a k+3-point Gauss–Legendre rule.
pub fn dg_l2_error<F: Fn(f64) -> f64>(sol: &DgSolution, exact: F) -> f64 {
    values_l2_error(&sol.mesh, &sol.values, exact)
}

/// Same quadrature error measure for any nodal vector interpreted as a
/// piecewise polynomial on the mesh.
pub fn values_l2_error<F: Fn(f64) -> f64>(
    mesh: &UniformPeriodicMesh,
    values: &DVector<f64>,
    exact: F,
) -> f64 {
    let pc = mesh.nodes_per_cell();
    let (q_nodes, q_weights) = quadrature::gauss_legendre(pc + 2);
    let basis = LagrangeBasis::new(mesh.local_nodes());
    // Interpolation matrix from nodal values to quadrature points.
    let eval = DMatrix::from_fn(q_nodes.len(), pc, |q, p| {
        let mut row = vec![0.0; pc];
        basis.eval_all(q_nodes[q], &mut row);
        row[p]
    });
    let half_h = 0.5 * mesh.cell_width();
    let mut acc = 0.0;
    for j in 0..mesh.cells() {
        let cell = values.rows(j * pc, pc);
        let at_quad = &eval * cell;
        let (lo, _) = mesh.cell_bounds(j);
        for (q, &xi) in q_nodes.iter().enumerate() {
            let x = lo + half_h * (xi + 1.0);
            let diff = at_quad[q] - exact(x);
            acc += half_h * q_weights[q] * diff * diff;
        }
    }
    acc.sqrt()
}

/// Total integral of the DG solution over the domain (exact for the
/// polynomial space).
pub fn total_mass(sol: &DgSolution) -> f64 {
    let mesh = &sol.mesh;
    let pc = mesh.nodes_per_cell();
    let half_h = 0.5 * mesh.cell_width();
    let w = mesh.local_weights();
    let mut acc = 0.0;
    for (i, v) in sol.values.iter().enumerate() {
        acc += half_h * w[i % pc] * v;
    }
    acc
}
