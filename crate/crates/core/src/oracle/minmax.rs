//! Finite-dimensional model of two extensions.
//!
//! `A₁ = A₀ + Δ` where `Δ` is Hermitian and `(I - P) Δ (I - P) = 0` for the
//! orthogonal projector `P` onto a random `d`-dimensional subspace, so the
//! quadratic forms of `A₀` and `A₁` agree on `ran(I - P)`. Min-max then
//! forces `λ_{n+d}(A₁) ≥ λ_n(A₀)` and the reverse, which the check verifies
//! by dense eigensolves.

use crate::graph::orthonormalize_columns;
use crate::rng::SplitMix64;
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, SymmetricEigen};

#[derive(Debug, Clone)]
pub struct MinmaxModel {
    pub n: usize,
    pub d: usize,
    pub a0: DMatrix<C64>,
    pub a1: DMatrix<C64>,
    pub projector: DMatrix<C64>,
}

fn random_matrix(rng: &mut SplitMix64, rows: usize, cols: usize) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.complex_normal();
        }
    }
    m
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_dimensions(n: usize, d: usize) -> Result<()> {
    if n == 0 || d >= n {
        return Err(Error::BadDimensions { n, d });
    }
    Ok(())
}

/// Random model with `Δ = PGP + PG(I-P) + (I-P)G*P`, Hermitian part taken.
pub fn make_minmax_model(n: usize, d: usize, seed: u64) -> Result<MinmaxModel> {
    check_dimensions(n, d)?;
    let mut rng = SplitMix64::new(seed);
    let a0 = hermitian_part(&random_matrix(&mut rng, n, n));
    let projector = if d == 0 {
        DMatrix::<C64>::zeros(n, n)
    } else {
        let q = orthonormalize_columns(random_matrix(&mut rng, n, d));
        &q * q.adjoint()
    };
    let g = random_matrix(&mut rng, n, n);
    let complement = DMatrix::<C64>::identity(n, n) - &projector;
    let delta = &projector * &g * &projector
        + &projector * &g * &complement
        + &complement * g.adjoint() * &projector;
    let a1 = &a0 + hermitian_part(&delta);
    Ok(MinmaxModel {
        n,
        d,
        a0,
        a1,
        projector,
    })
}

/// Negative control: full-rank Hermitian `Δ` with no form agreement, while
/// still declaring codimension `d`.
pub fn make_unconstrained_model(n: usize, d: usize, seed: u64) -> Result<MinmaxModel> {
    check_dimensions(n, d)?;
    let mut rng = SplitMix64::new(seed);
    let a0 = hermitian_part(&random_matrix(&mut rng, n, n));
    let a1 = &a0 + hermitian_part(&random_matrix(&mut rng, n, n));
    Ok(MinmaxModel {
        n,
        d,
        a0,
        a1,
        projector: DMatrix::<C64>::zeros(n, n),
    })
}

impl MinmaxModel {
    pub fn delta(&self) -> DMatrix<C64> {
        &self.a1 - &self.a0
    }

    /// `‖Δ - Δ*‖_max`.
    pub fn hermitian_defect(&self) -> f64 {
        let delta = self.delta();
        max_abs(&(&delta - delta.adjoint()))
    }

    /// `‖(I - P) Δ (I - P)‖_max`.
    pub fn form_defect(&self) -> f64 {
        let complement = DMatrix::<C64>::identity(self.n, self.n) - &self.projector;
        max_abs(&(&complement * self.delta() * &complement))
    }
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn count_le(sorted: &[f64], e: f64) -> usize {
    sorted.partition_point(|&x| x <= e)
}

/// Both shifted interlacing inequalities and `sup |N₁ - N₀| ≤ d` over the
/// jump-adjacent probes of both spectra.
pub fn finite_dim_minmax_check(m: &MinmaxModel) -> bool {
    let l0 = hermitian_eigenvalues(&m.a0);
    let l1 = hermitian_eigenvalues(&m.a1);
    let d = m.d;
    let tol = |x: f64| 1e-10 * (1.0 + x.abs());
    for i in 0..m.n - d {
        if l1[i + d] < l0[i] - tol(l0[i]) || l0[i + d] < l1[i] - tol(l1[i]) {
            return false;
        }
    }
    l0.iter().chain(&l1).all(|&x| {
        let delta = 1e-12 * x.abs().max(1.0);
        [x - delta, x, x + delta]
            .iter()
            .all(|&e| count_le(&l0, e).abs_diff(count_le(&l1, e)) <= d)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codimension_zero_leaves_operator_unchanged() {
        let m = make_minmax_model(8, 0, 5).unwrap();
        assert_eq!(max_abs(&m.delta()), 0.0);
        assert!(finite_dim_minmax_check(&m));
    }

    #[test]
    fn construction_invariants() {
        let m = make_minmax_model(8, 2, 3).unwrap();
        assert!(m.form_defect() <= 1e-12, "{}", m.form_defect());
        assert!(m.hermitian_defect() <= 1e-12);
        let p2 = &m.projector * &m.projector;
        assert!(max_abs(&(&p2 - &m.projector)) < 1e-12);
        let trace: f64 = (0..8).map(|i| m.projector[(i, i)].re).sum();
        assert!((trace - 2.0).abs() < 1e-12);
    }

    #[test]
    fn larger_model_is_finite_and_passes() {
        let m = make_minmax_model(50, 5, 11).unwrap();
        assert!(hermitian_eigenvalues(&m.a1).iter().all(|x| x.is_finite()));
        assert!(finite_dim_minmax_check(&m));
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(make_minmax_model(4, 4, 1), Err(Error::BadDimensions { .. })));
        assert!(make_minmax_model(0, 0, 1).is_err());
    }

    #[test]
    fn negative_control_can_fail() {
        let fails = (0..20)
            .filter(|&s| !finite_dim_minmax_check(&make_unconstrained_model(30, 1, s).unwrap()))
            .count();
        assert!(fails > 0);
    }
}
