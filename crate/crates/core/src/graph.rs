//! Undirected weighted communication graph between agents.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::numerics::{symmetric_eigenvalues, Matrix};

/// λ₂ at or below this is treated as zero (disconnected graph).
pub const CONNECTIVITY_EPS: f64 = 1e-9;

/// Dense symmetric adjacency `a_ij = a_ji ≥ 0` with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    adjacency: Matrix,
}

impl CommGraph {
    pub fn new(adjacency: Matrix) -> Result<Self> {
        let n = adjacency.rows();
        if !adjacency.is_square() {
            return Err(Error::Dimension("adjacency matrix must be square".into()));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(format!("graph needs at least 2 agents, got {n}")));
        }
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::InvalidParameter(format!("self loop at agent {i}")));
            }
            for j in 0..n {
                let a = adjacency[(i, j)];
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::InvalidParameter(format!("edge weight a[{i}][{j}] = {a} must be finite and nonnegative")));
                }
                if a != adjacency[(j, i)] {
                    return Err(Error::InvalidParameter(format!("edge ({i}, {j}) is not symmetric")));
                }
            }
        }
        Ok(CommGraph { adjacency })
    }

    /// Builds from an undirected edge list with 0-based indices. Repeated
    /// edges overwrite.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut a = Matrix::zeros(n, n);
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!("edge ({i}, {j}) out of range for {n} agents")));
            }
            if i == j {
                return Err(Error::InvalidParameter(format!("self loop at agent {i}")));
            }
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        CommGraph::new(a)
    }

    pub fn ring(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        CommGraph::from_edges(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j, 1.0));
            }
        }
        CommGraph::from_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[(i, j)]
    }

    /// Neighbors of `i` with their positive weights.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adjacency
            .row(i)
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(j, &w)| (j, w))
    }

    /// Edge list `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.weight(i, j);
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// ℒ = 𝒟 − 𝒜.
    pub fn laplacian(&self) -> Matrix {
        let n = self.n();
        let mut l = self.adjacency.scale(-1.0);
        for i in 0..n {
            // diagonal is exactly minus the off-diagonal sum, so ℒ·𝟙 = 0
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| l[(i, j)]).sum();
            l[(i, i)] = -off;
        }
        l
    }

    /// Algebraic connectivity, the second-smallest Laplacian eigenvalue.
    pub fn lambda2(&self) -> Result<f64> {
        let eig = symmetric_eigenvalues(&self.laplacian())?;
        Ok(eig[1])
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for (j, _) in self.neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}
