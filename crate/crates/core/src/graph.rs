//! Metric graphs and the unitary parameterization of their self-adjoint
//! extensions.
//!
//! An extension is stored in boundary form: a function with endpoint values
//! `u ∈ ℂ^{2K}` and inward derivatives `u' ∈ ℂ^{2K}` lies in its domain iff
//!
//! ```text
//! (U - I) u + i (U + I) u' = 0
//! ```
//!
//! Endpoint slots are ordered `(edge 0 at 0, edge 0 at L₀, edge 1 at 0, ...)`,
//! i.e. slot `2i` is the start of edge `i` and slot `2i + 1` its end.

use crate::rng::SplitMix64;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;

/// Edge lengths of a metric graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    lengths: Vec<f64>,
    total_length: f64,
}

impl GraphSpec {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::EmptyGraph);
        }
        for (index, &length) in lengths.iter().enumerate() {
            // `!(x > 0)` also rejects NaN.
            if !(length > 0.0) || !length.is_finite() {
                return Err(Error::NonPositiveLength { index, length });
            }
        }
        let total_length = lengths.iter().sum();
        Ok(Self {
            lengths,
            total_length,
        })
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Number of edges `K`.
    pub fn edge_count(&self) -> usize {
        self.lengths.len()
    }

    /// Total length `Λ = Σ Lᵢ`.
    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Number of endpoint slots, `2K`; also the deficiency index.
    pub fn slot_count(&self) -> usize {
        2 * self.lengths.len()
    }

    pub fn min_length(&self) -> f64 {
        self.lengths.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Convenience wrapper matching the operation name used in the docs.
pub fn make_graph(lengths: &[f64]) -> Result<GraphSpec> {
    GraphSpec::new(lengths.to_vec())
}

/// Vertex incidence of a graph; only used to build coupling conditions.
///
/// `edge_endpoints[i] = (v, w)` attaches the start of edge `i` to vertex `v`
/// and its end to vertex `w`. Loops and multiple edges are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombinatorialGraph {
    vertex_count: usize,
    edge_endpoints: Vec<(usize, usize)>,
}

impl CombinatorialGraph {
    pub fn new(vertex_count: usize, edge_endpoints: Vec<(usize, usize)>) -> Result<Self> {
        if edge_endpoints.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut degree = vec![0usize; vertex_count];
        for (i, &(v, w)) in edge_endpoints.iter().enumerate() {
            if v >= vertex_count || w >= vertex_count {
                return Err(Error::InconsistentGraph(format!(
                    "edge {i} references vertex {} but there are only {vertex_count}",
                    v.max(w)
                )));
            }
            degree[v] += 1;
            degree[w] += 1;
        }
        if let Some(v) = degree.iter().position(|&d| d == 0) {
            return Err(Error::InconsistentGraph(format!("vertex {v} is isolated")));
        }
        Ok(Self {
            vertex_count,
            edge_endpoints,
        })
    }

    /// Path `0 - 1 - ... - K` with `K` edges.
    pub fn path(edges: usize) -> Result<Self> {
        Self::new(edges + 1, (0..edges).map(|i| (i, i + 1)).collect())
    }

    /// Star with centre `0` and `edges` leaves; every edge starts at the centre.
    pub fn star(edges: usize) -> Result<Self> {
        Self::new(edges + 1, (0..edges).map(|i| (0, i + 1)).collect())
    }

    /// Cycle of `edges` edges; a single edge gives a loop.
    pub fn cycle(edges: usize) -> Result<Self> {
        Self::new(edges, (0..edges).map(|i| (i, (i + 1) % edges)).collect())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_endpoints(&self) -> &[(usize, usize)] {
        &self.edge_endpoints
    }

    pub fn edge_count(&self) -> usize {
        self.edge_endpoints.len()
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.edge_endpoints
            .iter()
            .map(|&(v, w)| (v == vertex) as usize + (w == vertex) as usize)
            .sum()
    }

    /// Endpoint slots attached to each vertex, in increasing slot order.
    pub fn slots_by_vertex(&self) -> Vec<Vec<usize>> {
        let mut slots = vec![Vec::new(); self.vertex_count];
        for (i, &(v, w)) in self.edge_endpoints.iter().enumerate() {
            slots[v].push(2 * i);
            slots[w].push(2 * i + 1);
        }
        for s in &mut slots {
            s.sort_unstable();
        }
        slots
    }
}

/// A `2K × 2K` unitary selecting one self-adjoint extension.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionUnitary {
    matrix: DMatrix<C64>,
}

/// Tolerance used when accepting a user-supplied matrix as unitary.
pub const UNITARY_TOL: f64 = 1e-10;

impl ExtensionUnitary {
    /// Wraps `matrix`, checking that it is square of even size and unitary to
    /// [`UNITARY_TOL`].
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidArgument(format!(
                "extension matrix is {}x{}, not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() == 0 || !matrix.nrows().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "extension matrix dimension {} is not a positive even number",
                matrix.nrows()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument(
                "extension matrix has non-finite entries".into(),
            ));
        }
        let defect = unitarity_defect(&matrix);
        if defect > UNITARY_TOL {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Self { matrix })
    }

    /// Skips validation; for constructors that are unitary by construction.
    fn from_unitary(matrix: DMatrix<C64>) -> Self {
        debug_assert!(unitarity_defect(&matrix) <= UNITARY_TOL);
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Equal to [`dim`](Self::dim): both deficiency indices are `2K`.
    pub fn deficiency_index(&self) -> usize {
        self.dim()
    }

    pub fn edge_count(&self) -> usize {
        self.dim() / 2
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn check_graph(&self, g: &GraphSpec) -> Result<()> {
        if self.dim() != g.slot_count() {
            return Err(Error::DimensionMismatch {
                expected: g.slot_count(),
                found: self.dim(),
            });
        }
        Ok(())
    }
}

/// `max |(U*U - I)_{ij}|`.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let gram = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// True iff `‖U*U − I‖_max ≤ tol`.
pub fn validate_unitary(u: &ExtensionUnitary, tol: f64) -> bool {
    unitarity_defect(u.matrix()) <= tol
}

/// Decoupled edges with `u = 0` at every endpoint: `U = -I`.
pub fn dirichlet_extension(edges: usize) -> ExtensionUnitary {
    let n = 2 * edges;
    ExtensionUnitary::from_unitary(-DMatrix::<C64>::identity(n, n))
}

/// Decoupled edges with `u' = 0` at every endpoint: `U = I`.
pub fn neumann_extension(edges: usize) -> ExtensionUnitary {
    let n = 2 * edges;
    ExtensionUnitary::from_unitary(DMatrix::<C64>::identity(n, n))
}

/// Continuity plus vanishing sum of inward derivatives at every vertex.
///
/// The block on the slots of a vertex of degree `v` is `(2/v) J - I`.
pub fn kirchhoff_extension(g: &CombinatorialGraph, edges: usize) -> Result<ExtensionUnitary> {
    if g.edge_count() != edges {
        return Err(Error::InconsistentGraph(format!(
            "combinatorial graph has {} endpoints, metric graph has {}",
            2 * g.edge_count(),
            2 * edges
        )));
    }
    let n = 2 * edges;
    let mut u = DMatrix::<C64>::zeros(n, n);
    for slots in g.slots_by_vertex() {
        let coupling = 2.0 / slots.len() as f64;
        for &a in &slots {
            for &b in &slots {
                let delta = if a == b { 1.0 } else { 0.0 };
                u[(a, b)] = C64::new(coupling - delta, 0.0);
            }
        }
    }
    Ok(ExtensionUnitary::from_unitary(u))
}

/// Haar-distributed `2K × 2K` unitary, deterministic in `seed`.
///
/// Entries are filled row by row with complex normals from
/// [`SplitMix64`], then the columns are orthonormalized left to right by
/// modified Gram–Schmidt with one reorthogonalization pass. Gram–Schmidt
/// leaves a positive real diagonal in the triangular factor, which is the
/// phase normalization that makes the result Haar distributed.
pub fn random_extension(edges: usize, seed: u64) -> ExtensionUnitary {
    let n = 2 * edges;
    let mut rng = SplitMix64::new(seed);
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = rng.complex_normal();
        }
    }
    ExtensionUnitary::from_unitary(orthonormalize_columns(m))
}

/// Modified Gram–Schmidt with reorthogonalization. Columns must be
/// linearly independent, which holds with probability one for Gaussian fills.
pub(crate) fn orthonormalize_columns(mut m: DMatrix<C64>) -> DMatrix<C64> {
    let (rows, cols) = m.shape();
    for j in 0..cols {
        for _pass in 0..2 {
            for k in 0..j {
                let mut proj = C64::new(0.0, 0.0);
                for i in 0..rows {
                    proj += m[(i, k)].conj() * m[(i, j)];
                }
                for i in 0..rows {
                    let qk = m[(i, k)];
                    m[(i, j)] -= proj * qk;
                }
            }
        }
        let norm = (0..rows).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..rows {
            m[(i, j)] /= norm;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn make_graph_examples() {
        let g = make_graph(&[PI]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.total_length(), PI);

        let g = make_graph(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.total_length(), 6.0);

        assert!(matches!(
            make_graph(&[1.0, -1.0]),
            Err(Error::NonPositiveLength { index: 1, .. })
        ));
        assert_eq!(make_graph(&[]), Err(Error::EmptyGraph));
        assert!(make_graph(&[0.0]).is_err());
        assert!(make_graph(&[f64::NAN]).is_err());
    }

    #[test]
    fn dirichlet_and_neumann_are_minus_and_plus_identity() {
        for k in 1..=3 {
            let d = dirichlet_extension(k);
            let n = neumann_extension(k);
            assert_eq!(d.dim(), 2 * k);
            assert_eq!(d.deficiency_index(), 2 * k);
            for i in 0..2 * k {
                for j in 0..2 * k {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert_eq!(d.matrix()[(i, j)], C64::new(-e, 0.0));
                    assert_eq!(n.matrix()[(i, j)], C64::new(e, 0.0));
                }
            }
            assert!(validate_unitary(&d, 1e-10));
            assert!(validate_unitary(&n, 1e-10));
        }
    }

    #[test]
    fn kirchhoff_two_edges_joined_at_a_vertex() {
        // 0 --e0-- 1 --e1-- 2: slots 1 and 2 meet at vertex 1.
        let g = CombinatorialGraph::path(2).unwrap();
        let u = kirchhoff_extension(&g, 2).unwrap();
        let m = u.matrix();
        let re = |i, j| m[(i, j)].re;
        assert_eq!(re(0, 0), 1.0);
        assert_eq!(re(3, 3), 1.0);
        assert_eq!(re(1, 1), 0.0);
        assert_eq!(re(1, 2), 1.0);
        assert_eq!(re(2, 1), 1.0);
        assert_eq!(re(2, 2), 0.0);
        assert_eq!(re(0, 1), 0.0);
    }

    #[test]
    fn kirchhoff_blocks_are_symmetric_involutions() {
        let graphs = [
            CombinatorialGraph::star(5).unwrap(),
            CombinatorialGraph::cycle(1).unwrap(),
            CombinatorialGraph::cycle(3).unwrap(),
            CombinatorialGraph::new(2, vec![(0, 1), (0, 1), (1, 0)]).unwrap(),
        ];
        for g in graphs {
            let u = kirchhoff_extension(&g, g.edge_count()).unwrap();
            let m = u.matrix();
            assert!(m.iter().all(|z| z.im == 0.0));
            assert_eq!(m, &m.transpose());
            let sq = m * m;
            let id = DMatrix::<C64>::identity(m.nrows(), m.nrows());
            assert!((sq - id).iter().all(|z| z.norm() < 1e-14));
            assert!(validate_unitary(&u, 1e-10));
        }
    }

    #[test]
    fn kirchhoff_rejects_wrong_edge_count() {
        let g = CombinatorialGraph::path(2).unwrap();
        assert!(matches!(
            kirchhoff_extension(&g, 3),
            Err(Error::InconsistentGraph(_))
        ));
    }

    #[test]
    fn combinatorial_graph_validation() {
        assert!(CombinatorialGraph::new(2, vec![(0, 2)]).is_err());
        assert!(CombinatorialGraph::new(3, vec![(0, 1)]).is_err());
        assert!(CombinatorialGraph::new(1, vec![(0, 0)]).is_ok());
        assert_eq!(CombinatorialGraph::cycle(1).unwrap().degree(0), 2);
    }

    #[test]
    fn random_extension_is_deterministic_and_unitary() {
        let a = random_extension(2, 1);
        let b = random_extension(2, 1);
        let c = random_extension(2, 2);
        assert_eq!(a, b);
        assert_ne!(a, c);
        for seed in 0..50 {
            assert!(validate_unitary(&random_extension(3, seed), 1e-10));
        }
    }

    #[test]
    fn validate_unitary_detects_perturbation() {
        assert!(validate_unitary(&dirichlet_extension(2), 1e-10));
        let mut m = DMatrix::<C64>::identity(2, 2);
        m[(0, 0)] = C64::new(1.0 + 1e-6, 0.0);
        let u = ExtensionUnitary { matrix: m };
        assert!(!validate_unitary(&u, 1e-10));
        assert!(matches!(
            ExtensionUnitary::new(u.matrix().clone()),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn extension_rejects_odd_or_rectangular() {
        assert!(ExtensionUnitary::new(DMatrix::<C64>::identity(3, 3)).is_err());
        assert!(ExtensionUnitary::new(DMatrix::<C64>::zeros(2, 4)).is_err());
    }
}
