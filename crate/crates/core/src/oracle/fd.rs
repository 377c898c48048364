//! Finite-difference eigenvalues of graphs with classical vertex conditions.
//!
//! Each edge carries a uniform mesh of linear elements with lumped mass,
//! which on the interior is the three-point second difference. Dirichlet
//! ends are removed, Neumann ends are free nodes of their own, and Kirchhoff
//! vertices are single nodes shared by all incident edge ends (continuity is
//! built in and the derivative sum condition is natural).
//!
//! Eigenvalues of `K x = λ M x` are found by bisection on the inertia of
//! `K - σM`. Ordering the chain nodes first, the inertia is that of the
//! block-diagonal tridiagonal part plus that of its small Schur complement
//! on the vertex nodes.

use crate::graph::{CombinatorialGraph, GraphSpec};
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Largest number of unknowns on the finer mesh.
pub const MAX_UNKNOWNS: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub enum FdCondition {
    Dirichlet,
    Neumann,
    Kirchhoff(CombinatorialGraph),
}

#[derive(Debug, Clone, Copy)]
struct FdEdge {
    elements: usize,
    spacing: f64,
    /// Vertex nodes at `x = 0` and `x = L`; `None` for Dirichlet ends.
    ends: (Option<usize>, Option<usize>),
}

/// Assembled discretization on one mesh.
#[derive(Debug, Clone)]
pub struct FdProblem {
    edges: Vec<FdEdge>,
    vertex_count: usize,
}

impl FdProblem {
    /// Mesh with `ceil(L_i / h)` elements per edge, each count multiplied by
    /// `refine`.
    pub fn new(g: &GraphSpec, condition: &FdCondition, h: f64, refine: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("mesh spacing {h} must be positive")));
        }
        let limit = g.min_length() / 20.0;
        if h > limit {
            return Err(Error::MeshTooCoarse { h, limit });
        }
        let k = g.edge_count();
        let (ends, vertex_count): (Vec<(Option<usize>, Option<usize>)>, usize) = match condition {
            FdCondition::Dirichlet => (vec![(None, None); k], 0),
            FdCondition::Neumann => ((0..k).map(|i| (Some(2 * i), Some(2 * i + 1))).collect(), 2 * k),
            FdCondition::Kirchhoff(comb) => {
                if comb.edge_count() != k {
                    return Err(Error::InconsistentGraph(format!(
                        "combinatorial graph has {} edges, metric graph {k}",
                        comb.edge_count()
                    )));
                }
                (
                    comb.edge_endpoints()
                        .iter()
                        .map(|&(a, b)| (Some(a), Some(b)))
                        .collect(),
                    comb.vertex_count(),
                )
            }
        };
        let edges: Vec<FdEdge> = g
            .lengths()
            .iter()
            .zip(ends)
            .map(|(&l, ends)| {
                let elements = (l / h).ceil() as usize * refine.max(1);
                FdEdge {
                    elements,
                    spacing: l / elements as f64,
                    ends,
                }
            })
            .collect();
        let problem = Self {
            edges,
            vertex_count,
        };
        if problem.size() > MAX_UNKNOWNS {
            return Err(Error::InvalidArgument(format!(
                "{} unknowns exceed the limit of {MAX_UNKNOWNS}",
                problem.size()
            )));
        }
        Ok(problem)
    }

    pub fn size(&self) -> usize {
        self.vertex_count + self.edges.iter().map(|e| e.elements - 1).sum::<usize>()
    }

    /// Dense stiffness and (diagonal) mass matrices; chain nodes edge by
    /// edge, then vertex nodes.
    pub fn assemble(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.size();
        let mut k = DMatrix::<f64>::zeros(n, n);
        let mut m = DMatrix::<f64>::zeros(n, n);
        let chain_total = n - self.vertex_count;
        let mut offset = 0;
        for e in &self.edges {
            let inner = e.elements - 1;
            // Node sequence along the edge: start end, interior nodes, far end.
            let mut nodes: Vec<Option<usize>> = vec![e.ends.0.map(|v| chain_total + v)];
            nodes.extend((0..inner).map(|i| Some(offset + i)));
            nodes.push(e.ends.1.map(|v| chain_total + v));
            for w in nodes.windows(2) {
                let (a, b) = (w[0], w[1]);
                let s = 1.0 / e.spacing;
                let half = 0.5 * e.spacing;
                for &x in [a, b].iter().flatten() {
                    k[(x, x)] += s;
                    m[(x, x)] += half;
                }
                if let (Some(a), Some(b)) = (a, b) {
                    k[(a, b)] -= s;
                    k[(b, a)] -= s;
                }
            }
            offset += inner;
        }
        (k, m)
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let mut negatives = 0;
        let mut schur = DMatrix::<f64>::zeros(self.vertex_count, self.vertex_count);
        for e in &self.edges {
            let s = 1.0 / e.spacing;
            let diag = 2.0 * s - sigma * e.spacing;
            let inner = e.elements - 1;
            for v in [e.ends.0, e.ends.1].into_iter().flatten() {
                schur[(v, v)] += s - sigma * 0.5 * e.spacing;
            }
            // LDLᵀ of the constant tridiagonal chain (diag, off = -s), with
            // forward solves for the first and last unit vectors.
            let off = -s;
            let mut pivots = Vec::with_capacity(inner);
            let mut prev: f64 = 0.0;
            for i in 0..inner {
                let mut p = if i == 0 { diag } else { diag - off * off / prev };
                if p == 0.0 {
                    p = f64::EPSILON * s;
                }
                if p < 0.0 {
                    negatives += 1;
                }
                pivots.push(p);
                prev = p;
            }
            if self.vertex_count == 0 {
                continue;
            }
            let (x11, xnn, x1n) = chain_inverse_corners(&pivots, off);
            let c2 = off * off;
            if let Some(a) = e.ends.0 {
                schur[(a, a)] -= c2 * x11;
            }
            if let Some(b) = e.ends.1 {
                schur[(b, b)] -= c2 * xnn;
            }
            if let (Some(a), Some(b)) = e.ends {
                schur[(a, b)] -= c2 * x1n;
                schur[(b, a)] -= c2 * x1n;
            }
        }
        if self.vertex_count > 0 {
            negatives += SymmetricEigen::new(schur)
                .eigenvalues
                .iter()
                .filter(|&&x| x < 0.0)
                .count();
        }
        negatives
    }

    /// The lowest `count` eigenvalues, each bisected to near machine precision.
    pub fn lowest_eigenvalues(&self, count: usize) -> Vec<f64> {
        let mut hi = 1.0;
        while self.count_below(hi) < count {
            hi *= 2.0;
        }
        // The operators are nonnegative, so nothing lies below -1.
        let mut out = Vec::with_capacity(count);
        let mut lo = -1.0;
        for i in 0..count {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if b - a <= 1e-15 * mid.abs().max(1e-3) || mid == a || mid == b {
                    break;
                }
                if self.count_below(mid) > i {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            let value = 0.5 * (a + b);
            out.push(value);
            lo = a;
        }
        out
    }
}

/// Corner entries `(T⁻¹)₁₁`, `(T⁻¹)ₙₙ`, `(T⁻¹)₁ₙ` of a symmetric tridiagonal
/// chain with constant off-diagonal `off`, given its LDLᵀ pivots.
fn chain_inverse_corners(pivots: &[f64], off: f64) -> (f64, f64, f64) {
    let n = pivots.len();
    // L has subdiagonal l_i = off / p_{i-1}. Solve L D Lᵀ x = e_k.
    let solve = |k: usize| -> Vec<f64> {
        let mut y = vec![0.0; n];
        y[k] = 1.0;
        for i in (k + 1)..n {
            y[i] = -(off / pivots[i - 1]) * y[i - 1];
        }
        for i in 0..n {
            y[i] /= pivots[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            y[i] -= (off / pivots[i]) * y[i + 1];
        }
        y
    };
    let first = solve(0);
    let last = solve(n - 1);
    (first[0], last[n - 1], first[n - 1])
}

/// Lowest `count ≤ 10` eigenvalues, Richardson-extrapolated from meshes `h`
/// and `h/2`: `E* = (4 E_{h/2} - E_h) / 3`.
pub fn fd_graph_eigenvalues(
    g: &GraphSpec,
    condition: &FdCondition,
    h: f64,
    count: usize,
) -> Result<Vec<f64>> {
    if count > 10 {
        return Err(Error::InvalidArgument(format!("count {count} exceeds 10")));
    }
    let coarse = FdProblem::new(g, condition, h, 1)?.lowest_eigenvalues(count);
    let fine = FdProblem::new(g, condition, h, 2)?.lowest_eigenvalues(count);
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::make_graph;
    use std::f64::consts::PI;

    #[test]
    fn dirichlet_interval() {
        let g = make_graph(&[PI]).unwrap();
        let e = fd_graph_eigenvalues(&g, &FdCondition::Dirichlet, PI / 40.0, 3).unwrap();
        for (x, want) in e.iter().zip([1.0, 4.0, 9.0]) {
            assert!((x - want).abs() < 1e-4 * want, "{x}");
        }
    }

    #[test]
    fn neumann_interval() {
        let g = make_graph(&[1.0]).unwrap();
        let e = fd_graph_eigenvalues(&g, &FdCondition::Neumann, 0.05, 2).unwrap();
        assert!(e[0].abs() < 1e-10, "{}", e[0]);
        assert!((e[1] - PI * PI).abs() < 1e-4 * PI * PI, "{}", e[1]);
    }

    #[test]
    fn circle_from_loop() {
        let g = make_graph(&[2.0 * PI]).unwrap();
        let c = FdCondition::Kirchhoff(CombinatorialGraph::cycle(1).unwrap());
        let e = fd_graph_eigenvalues(&g, &c, 0.05, 5).unwrap();
        for (x, want) in e.iter().zip([0.0, 1.0, 1.0, 4.0, 4.0]) {
            assert!((x - want).abs() < 1e-4 * want.max(1.0), "{x} vs {want}");
        }
    }

    #[test]
    fn inertia_matches_dense_eigensolve() {
        let g = make_graph(&[0.9, 1.4, 0.6]).unwrap();
        let c = FdCondition::Kirchhoff(CombinatorialGraph::star(3).unwrap());
        let p = FdProblem::new(&g, &c, 0.03, 1).unwrap();
        let (k, m) = p.assemble();
        assert!((&k - k.transpose()).amax() < 1e-12);
        let minv_sqrt = m.map(|x| if x > 0.0 { 1.0 / x.sqrt() } else { 0.0 });
        let a = &minv_sqrt * &k * &minv_sqrt;
        let mut dense: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        let bisected = p.lowest_eigenvalues(8);
        for (x, y) in bisected.iter().zip(&dense) {
            assert!((x - y).abs() < 1e-9 * y.abs().max(1.0), "{x} vs {y}");
        }
        for sigma in [-0.5, 3.0, 17.0, 60.0] {
            let below = dense.iter().filter(|&&x| x < sigma).count();
            assert_eq!(p.count_below(sigma), below, "σ = {sigma}");
        }
    }

    #[test]
    fn richardson_improves_on_finer_mesh() {
        let g = make_graph(&[1.3]).unwrap();
        let c = FdCondition::Dirichlet;
        let coarse = FdProblem::new(&g, &c, 0.05, 1).unwrap().lowest_eigenvalues(4);
        let fine = FdProblem::new(&g, &c, 0.05, 2).unwrap().lowest_eigenvalues(4);
        let ext = fd_graph_eigenvalues(&g, &c, 0.05, 4).unwrap();
        for i in 0..4 {
            assert!((ext[i] - fine[i]).abs() < (coarse[i] - fine[i]).abs());
        }
    }

    #[test]
    fn argument_checks() {
        let g = make_graph(&[1.0, 2.0]).unwrap();
        assert!(matches!(
            fd_graph_eigenvalues(&g, &FdCondition::Dirichlet, 0.1, 3),
            Err(Error::MeshTooCoarse { .. })
        ));
        assert!(fd_graph_eigenvalues(&g, &FdCondition::Dirichlet, 0.01, 11).is_err());
        let wrong = FdCondition::Kirchhoff(CombinatorialGraph::path(3).unwrap());
        assert!(fd_graph_eigenvalues(&g, &wrong, 0.01, 3).is_err());
    }
}
