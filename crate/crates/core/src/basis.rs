//! Lagrange interpolation on a fixed set of nodes, in barycentric form.

use nalgebra::DMatrix;

/// Lagrange basis over distinct nodes with precomputed barycentric weights.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(nodes: &[f64]) -> Self {
        let n = nodes.len();
        assert!(n >= 1, "need at least one interpolation node");
        let mut weights = vec![1.0; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    weights[i] /= nodes[i] - nodes[j];
                }
            }
        }
        Self {
            nodes: nodes.to_vec(),
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Values of all cardinal basis polynomials at x.
    pub fn eval_all(&self, x: f64, out: &mut [f64]) {
        let n = self.nodes.len();
        debug_assert_eq!(out.len(), n);
        // Exact hit on a node: cardinal property.
        if let Some(hit) = self.nodes.iter().position(|&node| x == node) {
            out.fill(0.0);
            out[hit] = 1.0;
            return;
        }
        let mut denom = 0.0;
        for (slot, (w, node)) in out.iter_mut().zip(self.weights.iter().zip(&self.nodes)) {
            *slot = w / (x - node);
            denom += *slot;
        }
        for v in out.iter_mut() {
            *v /= denom;
        }
    }

    /// Interpolate nodal values at x.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let mut basis = vec![0.0; self.len()];
        self.eval_all(x, &mut basis);
        basis.iter().zip(values).map(|(b, v)| b * v).sum()
    }

    /// Differentiation matrix D with D[i, j] = φ_j'(x_i).
    pub fn diff_matrix(&self) -> DMatrix<f64> {
        let n = self.nodes.len();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = (self.weights[j] / self.weights[i]) / (self.nodes[i] - self.nodes[j]);
                    d[(i, j)] = v;
                    diag -= v;
                }
            }
            d[(i, i)] = diag;
        }
        d
    }
}
