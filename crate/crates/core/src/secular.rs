//! Secular matrix of a quantum graph.
//!
//! On edge `i` every solution of `-u'' = E u` is `a C(E, x) + b S(E, x)` with
//! `C = cos(√E x)` and `S = sin(√E x)/√E`, both entire in `E`. Stacking the
//! coefficients `(aᵢ, bᵢ)` and imposing the boundary relation of the
//! extension gives the `2K × 2K` matrix
//!
//! ```text
//! M(E) = (U - I) T0(E) + i (U + I) T1(E)
//! ```
//!
//! whose kernel is isomorphic to the eigenspace at `E`.

use crate::graph::{ExtensionUnitary, GraphSpec};
use crate::{Result, C64};
use nalgebra::DMatrix;

/// Below this value of `|E| L²` the Taylor expansions are used.
const TAYLOR_SWITCH: f64 = 1e-6;

/// `(C(E, L), S(E, L))`.
pub fn basis_values(energy: f64, length: f64) -> (f64, f64) {
    let z = energy * length * length;
    if z.abs() < TAYLOR_SWITCH {
        let c = 1.0 - z / 2.0 + z * z / 24.0;
        let s = length * (1.0 - z / 6.0 + z * z / 120.0);
        return (c, s);
    }
    if energy > 0.0 {
        let k = energy.sqrt();
        let (sin, cos) = (k * length).sin_cos();
        (cos, sin / k)
    } else {
        let kappa = (-energy).sqrt();
        let t = kappa * length;
        (t.cosh(), t.sinh() / kappa)
    }
}

/// Per-edge values of the solution basis and of its inward derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeTraces {
    /// `C(E, L)`
    pub c: f64,
    /// `S(E, L)`
    pub s: f64,
    /// `E·S(E, L)`, minus the derivative of `C` at `L`.
    pub cp: f64,
    /// `C(E, L)`, the derivative of `S` at `L`.
    pub sp: f64,
}

impl EdgeTraces {
    pub fn new(energy: f64, length: f64) -> Self {
        let (c, s) = basis_values(energy, length);
        Self {
            c,
            s,
            cp: energy * s,
            sp: c,
        }
    }

    /// `C² + E S²`, identically one.
    pub fn pythagorean(&self, energy: f64) -> f64 {
        self.c * self.c + energy * self.s * self.s
    }
}

/// Traces of the `(C, S)` basis for every edge at one energy.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTraces {
    pub energy: f64,
    pub edges: Vec<EdgeTraces>,
}

impl BasisTraces {
    pub fn new(energy: f64, g: &GraphSpec) -> Self {
        Self {
            energy,
            edges: g
                .lengths()
                .iter()
                .map(|&l| EdgeTraces::new(energy, l))
                .collect(),
        }
    }
}

/// Endpoint values `T0` and inward derivatives `T1` of the basis, as
/// block-diagonal `2K × 2K` matrices acting on the stacked `(aᵢ, bᵢ)`.
pub fn trace_matrices(energy: f64, g: &GraphSpec) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = g.slot_count();
    let mut t0 = DMatrix::zeros(n, n);
    let mut t1 = DMatrix::zeros(n, n);
    for (i, tr) in BasisTraces::new(energy, g).edges.iter().enumerate() {
        let (r, c) = (2 * i, 2 * i);
        t0[(r, c)] = 1.0;
        t0[(r + 1, c)] = tr.c;
        t0[(r + 1, c + 1)] = tr.s;
        t1[(r, c + 1)] = 1.0;
        t1[(r + 1, c)] = tr.cp;
        t1[(r + 1, c + 1)] = -tr.sp;
    }
    (t0, t1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecularMatrix {
    pub energy: f64,
    pub entries: DMatrix<C64>,
}

fn combine(u: &ExtensionUnitary, t0: &DMatrix<f64>, t1: &DMatrix<f64>) -> DMatrix<C64> {
    let n = u.dim();
    let id = DMatrix::<C64>::identity(n, n);
    let a = u.matrix() - &id;
    let b = (u.matrix() + &id) * C64::new(0.0, 1.0);
    a * t0.map(|x| C64::new(x, 0.0)) + b * t1.map(|x| C64::new(x, 0.0))
}

pub fn secular_matrix(energy: f64, g: &GraphSpec, u: &ExtensionUnitary) -> Result<SecularMatrix> {
    u.check_graph(g)?;
    let (t0, t1) = trace_matrices(energy, g);
    Ok(SecularMatrix {
        energy,
        entries: combine(u, &t0, &t1),
    })
}

/// Singular values in ascending order, divided by `max(1, σ_max)`.
pub fn normalized_singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| a.total_cmp(b));
    let scale = sv.last().cloned().unwrap_or(0.0).max(1.0);
    sv.iter().map(|s| s / scale).collect()
}

/// Smallest singular value of `M(E)` over `max(1, σ_max)`.
pub fn sigma_min(energy: f64, g: &GraphSpec, u: &ExtensionUnitary) -> Result<f64> {
    let m = secular_matrix(energy, g, u)?;
    Ok(normalized_singular_values(&m.entries)[0])
}

/// Secular matrix in a rescaled basis with the same kernel dimension.
///
/// The `(C, S)` basis grows like `e^{√-E L}` for negative energies, which
/// drives the normalized smallest singular value of `M(E)` to zero whether or
/// not `E` is an eigenvalue. The root scan therefore works in a basis that
/// stays bounded on every edge:
///
/// * `E ≥ 0`: `(C, w S)` with `w = √(1 + E L²) / L`;
/// * `E < 0`: `cosh(κ(x - L/2))/cosh(κL/2)` and `sinh(κ(L/2 - x))/sinh(κL/2)`.
///
/// Both are invertible column changes of the `(C, S)` basis, so zeros and
/// their multiplicities coincide with those of `M(E)`.
pub fn scan_matrix(energy: f64, g: &GraphSpec, u: &ExtensionUnitary) -> DMatrix<C64> {
    let n = g.slot_count();
    let mut t0 = DMatrix::zeros(n, n);
    let mut t1 = DMatrix::zeros(n, n);
    for (i, &l) in g.lengths().iter().enumerate() {
        let (r, c) = (2 * i, 2 * i);
        if energy >= 0.0 {
            let tr = EdgeTraces::new(energy, l);
            let w = (1.0 + energy * l * l).sqrt() / l;
            t0[(r, c)] = 1.0;
            t0[(r + 1, c)] = tr.c;
            t0[(r + 1, c + 1)] = tr.s * w;
            t1[(r, c + 1)] = w;
            t1[(r + 1, c)] = tr.cp;
            t1[(r + 1, c + 1)] = -tr.sp * w;
        } else {
            let kappa = (-energy).sqrt();
            let (even, odd) = decaying_slopes(kappa, l);
            t0[(r, c)] = 1.0;
            t0[(r, c + 1)] = 1.0;
            t0[(r + 1, c)] = 1.0;
            t0[(r + 1, c + 1)] = -1.0;
            t1[(r, c)] = -even;
            t1[(r, c + 1)] = -odd;
            t1[(r + 1, c)] = -even;
            t1[(r + 1, c + 1)] = odd;
        }
    }
    combine(u, &t0, &t1)
}

/// `(κ tanh(κL/2), κ coth(κL/2))`, with the `κ → 0` limit `(0, 2/L)`.
fn decaying_slopes(kappa: f64, length: f64) -> (f64, f64) {
    let h = 0.5 * kappa * length;
    if h < 1e-6 {
        let h2 = h * h;
        let even = kappa * h * (1.0 - h2 / 3.0);
        let odd = (2.0 / length) * (1.0 + h2 / 3.0);
        (even, odd)
    } else {
        let t = h.tanh();
        (kappa * t, kappa / t)
    }
}

/// Normalized smallest singular value of [`scan_matrix`].
pub fn scan_sigma(energy: f64, g: &GraphSpec, u: &ExtensionUnitary) -> f64 {
    normalized_singular_values(&scan_matrix(energy, g, u))[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{
        dirichlet_extension, kirchhoff_extension, make_graph, neumann_extension,
        random_extension, CombinatorialGraph,
    };
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn basis_value_examples() {
        let (c, s) = basis_values(1.0, PI);
        assert_relative_eq!(c, -1.0, epsilon = 1e-15);
        assert!(s.abs() < 1e-15);

        assert_eq!(basis_values(0.0, 2.0), (1.0, 2.0));

        let (c, s) = basis_values(-1.0, 1.0);
        assert_relative_eq!(c, 1f64.cosh(), max_relative = 1e-15);
        assert_relative_eq!(s, 1f64.sinh(), max_relative = 1e-15);
    }

    #[test]
    fn taylor_branch_is_continuous_with_closed_form() {
        for &e in &[1e-7, -1e-7, 2e-7, -3e-7] {
            let l = 1.5;
            let (c, s) = basis_values(e, l);
            let k = (e.abs()).sqrt();
            let (c_ref, s_ref) = if e > 0.0 {
                ((k * l).cos(), (k * l).sin() / k)
            } else {
                ((k * l).cosh(), (k * l).sinh() / k)
            };
            assert_relative_eq!(c, c_ref, max_relative = 1e-12);
            assert_relative_eq!(s, s_ref, max_relative = 1e-12);
        }
    }

    #[test]
    fn pythagorean_identity() {
        for &e in &[-50.0, -3.0, -1e-8, 0.0, 1e-9, 0.7, 12.0, 400.0] {
            for &l in &[0.3, 1.0, 2.9] {
                let tr = EdgeTraces::new(e, l);
                let scale = tr.c * tr.c + e.abs() * tr.s * tr.s;
                assert!((tr.pythagorean(e) - 1.0).abs() < 1e-13 * scale, "E = {e}, L = {l}");
            }
        }
    }

    #[test]
    fn trace_matrix_examples() {
        let l = 1.7;
        let g = make_graph(&[l]).unwrap();
        let (t0, t1) = trace_matrices(0.0, &g);
        assert_eq!(t0, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, l]));
        assert_eq!(t1, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, -1.0]));

        let g = make_graph(&[PI]).unwrap();
        let (t0, t1) = trace_matrices(1.0, &g);
        let want0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        let want1 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
        assert!((t0 - want0).abs().max() < 1e-15);
        assert!((t1 - want1).abs().max() < 1e-15);
    }

    #[test]
    fn stacked_trace_determinant_is_one() {
        // Rows (u(L), -u'(L)) in terms of (a, b) have determinant -(C² + E S²).
        for &e in &[-4.0, 0.0, 2.5] {
            let tr = EdgeTraces::new(e, 1.3);
            let det = tr.c * (-tr.sp) - tr.s * tr.cp;
            assert_relative_eq!(-det, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn dirichlet_secular_is_minus_two_t0() {
        let g = make_graph(&[1.0, 2.3]).unwrap();
        let u = dirichlet_extension(2);
        let m = secular_matrix(3.1, &g, &u).unwrap();
        let (t0, _) = trace_matrices(3.1, &g);
        let want = t0.map(|x| C64::new(-2.0 * x, 0.0));
        assert!((m.entries - want).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn neumann_at_zero_has_kernel_k() {
        let g = make_graph(&[1.0, 2.0, 0.5]).unwrap();
        let u = neumann_extension(3);
        let m = secular_matrix(0.0, &g, &u).unwrap();
        let sv = normalized_singular_values(&m.entries);
        assert_eq!(sv.iter().filter(|&&s| s < 1e-6).count(), 3);
    }

    #[test]
    fn kirchhoff_loop_has_double_kernel_at_circle_eigenvalue() {
        let l = 2.0;
        let g = make_graph(&[l]).unwrap();
        let loop_graph = CombinatorialGraph::cycle(1).unwrap();
        let u = kirchhoff_extension(&loop_graph, 1).unwrap();
        let e = (2.0 * PI / l).powi(2);
        let sv = normalized_singular_values(&secular_matrix(e, &g, &u).unwrap().entries);
        assert_eq!(sv.iter().filter(|&&s| s < 1e-6).count(), 2);
    }

    #[test]
    fn sigma_min_examples() {
        let g = make_graph(&[PI]).unwrap();
        let u = dirichlet_extension(1);
        assert!(sigma_min(1.0, &g, &u).unwrap() < 1e-12);
        assert!(sigma_min(0.5, &g, &u).unwrap() > 1e-3);
    }

    #[test]
    fn sigma_min_rejects_dimension_mismatch() {
        let g = make_graph(&[1.0]).unwrap();
        let u = dirichlet_extension(2);
        assert!(sigma_min(1.0, &g, &u).is_err());
    }

    #[test]
    fn random_sigma_min_nonnegative_and_finite() {
        let g = make_graph(&[0.7, 1.9]).unwrap();
        let u = random_extension(2, 5);
        for i in -200..=200 {
            let e = i as f64 * 0.37;
            let s = sigma_min(e, &g, &u).unwrap();
            assert!(s.is_finite() && s >= 0.0);
            let m = secular_matrix(e, &g, &u).unwrap();
            assert!(m.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        }
    }

    #[test]
    fn scan_matrix_shares_zeros_with_secular_matrix() {
        let g = make_graph(&[1.0, 2.0]).unwrap();
        let u = neumann_extension(2);
        // Neumann eigenvalues (mπ/L)², including the double zero.
        for &(e, mult) in &[(PI * PI, 2usize), (PI * PI / 4.0, 1), (0.0, 2)] {
            let sv = normalized_singular_values(&scan_matrix(e, &g, &u));
            assert_eq!(sv.iter().filter(|&&s| s < 1e-6).count(), mult, "E = {e}");
        }
        let sv = normalized_singular_values(&scan_matrix(1.0, &g, &u));
        assert!(sv[0] > 1e-3);
    }

    #[test]
    fn scan_sigma_stays_away_from_zero_for_large_negative_energy() {
        // Dirichlet has no negative spectrum; the raw secular matrix becomes
        // numerically singular here, the rescaled one does not.
        let g = make_graph(&[3.0]).unwrap();
        let u = dirichlet_extension(1);
        let e = -400.0;
        assert!(sigma_min(e, &g, &u).unwrap() < 1e-8);
        assert!(scan_sigma(e, &g, &u) > 0.1);
    }

    #[test]
    fn scan_matrix_continuous_through_small_negative_energies() {
        let g = make_graph(&[1.3]).unwrap();
        let u = random_extension(1, 3);
        let a = scan_matrix(-1e-14, &g, &u);
        let b = scan_matrix(-1e-3, &g, &u);
        assert!((a - b).iter().all(|z| z.norm() < 1e-2));
    }
}
