//! Eigenvalue counting by spectral flow.
//!
//! Away from the Dirichlet spectrum of the edges, boundary data of solutions
//! satisfy `u' = Λ(E) u` with `Λ` the Dirichlet-to-Neumann map (inward
//! derivatives), a real symmetric matrix that increases with `E`. Its Cayley
//! transform `W(E) = (I + iΛ)(I - iΛ)⁻¹` is unitary, extends continuously
//! through the poles of `Λ`, and the boundary relation becomes
//!
//! ```text
//! U W(E) w = w,    w = (I - iΛ) u.
//! ```
//!
//! The eigenphases of `U W(E)` increase strictly with `E`, so the number of
//! eigenvalues `≤ E` is the number of times they have wound through `0`
//! since `E = -∞`, where `W = -I`. The total winding is available in closed
//! form from the per-edge eigenphases of `W`, and only the current phases of
//! `U W(E)` are needed numerically. This gives `N(E)` without locating a
//! single root, which is what the scanner uses to certify completeness.

use crate::graph::{ExtensionUnitary, GraphSpec};
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, Schur};
use std::f64::consts::{PI, TAU};

/// Phases this close to `0 mod 2π` are treated as sitting on an eigenvalue.
pub const PHASE_TOL: f64 = 1e-9;

/// Eigenphases of `W` on one edge for the symmetric and antisymmetric
/// boundary modes, unwrapped continuously from `-π` at `E = -∞`.
pub fn edge_phases(energy: f64, length: f64) -> (f64, f64) {
    if energy > 0.0 {
        let k = energy.sqrt();
        let h = 0.5 * k * length;
        // μ_s = k tan h, μ_a = -k cot h = k tan(h - π/2).
        (2.0 * unwrapped_angle(k, h), 2.0 * unwrapped_angle(k, h - 0.5 * PI))
    } else if energy == 0.0 {
        (0.0, -2.0 * (2.0 / length).atan())
    } else {
        let kappa = (-energy).sqrt();
        let h = 0.5 * kappa * length;
        let (even, odd) = if h < 1e-6 {
            (kappa * h, 2.0 / length * (1.0 + h * h / 3.0))
        } else {
            let t = h.tanh();
            (kappa * t, kappa / t)
        };
        (-2.0 * even.atan(), -2.0 * odd.atan())
    }
}

/// Continuous angle of `(cos h, k sin h)`, which stays in the quadrant of `h`.
fn unwrapped_angle(k: f64, h: f64) -> f64 {
    let (s, c) = h.sin_cos();
    let phi = (k * s).atan2(c);
    phi + TAU * ((h - phi) / TAU).round()
}

/// Per-edge Cayley transform of the Dirichlet-to-Neumann map.
fn edge_cayley(energy: f64, length: f64) -> [[C64; 2]; 2] {
    let (ts, ta) = edge_phases(energy, length);
    let a = C64::from_polar(1.0, ts);
    let b = C64::from_polar(1.0, ta);
    let p = (a + b) * 0.5;
    let m = (a - b) * 0.5;
    [[p, m], [m, p]]
}

/// Eigenphases of a unitary matrix, reduced to `[0, 2π)`.
pub fn unitary_phases(v: &DMatrix<C64>) -> Result<Vec<f64>> {
    let n = v.nrows();
    let schur = Schur::try_new(v.clone(), 1e-15, 10_000).ok_or_else(|| {
        Error::ScanInconsistency("Schur decomposition of U·W(E) did not converge".into())
    })?;
    let (_, t) = schur.unpack();
    Ok((0..n)
        .map(|i| {
            let mut phi = t[(i, i)].arg();
            if phi < 0.0 {
                phi += TAU;
            }
            if phi >= TAU {
                phi -= TAU;
            }
            phi
        })
        .collect())
}

/// Result of one spectral-flow evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowCount {
    /// Number of eigenvalues `≤ E`, with multiplicity.
    pub count: usize,
    /// Number of eigenphases within [`PHASE_TOL`] of `0 mod 2π`; nonzero when
    /// `E` is (numerically) an eigenvalue, in which case those are counted.
    pub on_eigenvalue: usize,
}

/// Spectral-flow counter for one graph and extension.
#[derive(Debug, Clone)]
pub struct FlowCounter {
    graph: GraphSpec,
    unitary: ExtensionUnitary,
    /// Σ of the eigenphases of `-U` in `[0, 2π)`, those near `2π` folded to 0.
    phase_sum_at_minus_infinity: f64,
}

impl FlowCounter {
    pub fn new(g: &GraphSpec, u: &ExtensionUnitary) -> Result<Self> {
        u.check_graph(g)?;
        let minus_u = -u.matrix().clone();
        let base = unitary_phases(&minus_u)?
            .into_iter()
            .map(|phi| if TAU - phi < PHASE_TOL { 0.0 } else { phi })
            .sum();
        Ok(Self {
            graph: g.clone(),
            unitary: u.clone(),
            phase_sum_at_minus_infinity: base,
        })
    }

    /// `N(E) = #{λ ≤ E}`, inclusive at eigenvalues up to [`PHASE_TOL`].
    pub fn count(&self, energy: f64) -> Result<FlowCount> {
        let n = self.graph.slot_count();
        let mut w = DMatrix::<C64>::zeros(n, n);
        let mut winding = TAU * self.graph.edge_count() as f64;
        for (i, &l) in self.graph.lengths().iter().enumerate() {
            let (ts, ta) = edge_phases(energy, l);
            winding += ts + ta;
            let block = edge_cayley(energy, l);
            for r in 0..2 {
                for c in 0..2 {
                    w[(2 * i + r, 2 * i + c)] = block[r][c];
                }
            }
        }
        let uw = self.unitary.matrix() * w;
        let mut on_eigenvalue = 0;
        let mut phase_sum = 0.0;
        for phi in unitary_phases(&uw)? {
            if phi < PHASE_TOL || TAU - phi < PHASE_TOL {
                on_eigenvalue += 1;
            } else {
                phase_sum += phi;
            }
        }
        let turns = (self.phase_sum_at_minus_infinity + winding - phase_sum) / TAU;
        let rounded = turns.round();
        if (turns - rounded).abs() > 1e-6 || rounded < -0.5 {
            return Err(Error::ScanInconsistency(format!(
                "spectral flow at E = {energy} is not an integer: {turns}"
            )));
        }
        Ok(FlowCount {
            count: rounded as usize,
            on_eigenvalue,
        })
    }
}
