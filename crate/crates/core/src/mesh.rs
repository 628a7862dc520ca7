//! Uniform periodic meshes of piecewise polynomials.
//!
//! A mesh splits [a, b] into J equal cells carrying k+1 local nodes each,
//! either Gauss–Legendre points or points equally spaced at cell-relative
//! positions (p - 1/2)/(k+1). Nodal vectors of length N = J(k+1) are ordered
//! cell by cell, left to right.

use crate::error::{Error, Result};
use crate::quadrature;
use nalgebra::DVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeLayout {
    GaussLegendre,
    EquidistantInCell,
}

#[derive(Debug, Clone)]
pub struct UniformPeriodicMesh {
    a: f64,
    b: f64,
    cells: usize,
    degree: usize,
    layout: NodeLayout,
    /// Local nodes in reference coordinates on (-1, 1), ascending.
    local_nodes: Vec<f64>,
    /// Quadrature weight attached to each local node (reference measure).
    local_weights: Vec<f64>,
    /// All N global nodes, ascending.
    nodes: Vec<f64>,
}

impl UniformPeriodicMesh {
    pub fn new(a: f64, b: f64, cells: usize, degree: usize, layout: NodeLayout) -> Result<Self> {
        if !(b > a) {
            return Err(Error::invalid(format!(
                "domain must satisfy b > a, got [{a}, {b}]"
            )));
        }
        if cells == 0 {
            return Err(Error::invalid("mesh needs at least one cell"));
        }
        let per_cell = degree + 1;
        let (local_nodes, local_weights) = match layout {
            NodeLayout::GaussLegendre => quadrature::gauss_legendre(per_cell),
            NodeLayout::EquidistantInCell => {
                let nodes: Vec<f64> = (0..per_cell)
                    .map(|p| 2.0 * (p as f64 + 0.5) / per_cell as f64 - 1.0)
                    .collect();
                // Midpoint-style weights: each node represents an equal slice
                // of the reference cell.
                let weights = vec![2.0 / per_cell as f64; per_cell];
                (nodes, weights)
            }
        };
        let h = (b - a) / cells as f64;
        let mut nodes = Vec::with_capacity(cells * per_cell);
        for j in 0..cells {
            let mid = a + (j as f64 + 0.5) * h;
            for xi in &local_nodes {
                nodes.push(mid + 0.5 * h * xi);
            }
        }
        Ok(Self {
            a,
            b,
            cells,
            degree,
            layout,
            local_nodes,
            local_weights,
            nodes,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn layout(&self) -> NodeLayout {
        self.layout
    }

    pub fn cell_width(&self) -> f64 {
        (self.b - self.a) / self.cells as f64
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.degree + 1
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn local_nodes(&self) -> &[f64] {
        &self.local_nodes
    }

    pub fn local_weights(&self) -> &[f64] {
        &self.local_weights
    }

    pub fn node(&self, cell: usize, p: usize) -> f64 {
        self.nodes[cell * self.nodes_per_cell() + p]
    }

    pub fn cell_bounds(&self, cell: usize) -> (f64, f64) {
        let h = self.cell_width();
        (self.a + cell as f64 * h, self.a + (cell as f64 + 1.0) * h)
    }

    /// Nodal vector of a function sampled at the mesh nodes.
    pub fn nodal_values<F: Fn(f64) -> f64>(&self, f: F) -> DVector<f64> {
        DVector::from_iterator(self.num_nodes(), self.nodes.iter().map(|&x| f(x)))
    }

    /// Weighted discrete L2 norm of a nodal vector, using each node's
    /// quadrature weight. For Gauss–Legendre layouts this is the exact L2
    /// norm of the degree-k interpolant whenever the integrand power fits
    /// the rule; in general it is the natural nodal norm on the mesh.
    pub fn discrete_l2_norm(&self, values: &DVector<f64>) -> f64 {
        let half_h = 0.5 * self.cell_width();
        let per_cell = self.nodes_per_cell();
        let mut acc = 0.0;
        for (i, v) in values.iter().enumerate() {
            acc += half_h * self.local_weights[i % per_cell] * v * v;
        }
        acc.sqrt()
    }

    /// Weighted discrete L2 distance between a nodal vector and a function
    /// sampled at the nodes.
    pub fn discrete_l2_error<F: Fn(f64) -> f64>(&self, values: &DVector<f64>, exact: F) -> f64 {
        let diff = DVector::from_iterator(
            self.num_nodes(),
            values
                .iter()
                .zip(self.nodes.iter())
                .map(|(v, &x)| v - exact(x)),
        );
        self.discrete_l2_norm(&diff)
    }
}
