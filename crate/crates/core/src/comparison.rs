//! Counting-function comparisons between spectra.
//!
//! Suprema of `|N - reference|` for a step function `N` are attained at its
//! jumps, so every probe set is augmented with `λ(1 ± 1e-12)` and `λ` for each
//! eigenvalue involved.

use crate::graph::{ExtensionUnitary, GraphSpec};
use crate::solver::full_spectrum;
use crate::spectrum::{Eigenvalue, Spectrum, Window};
use crate::{Error, Result};
use std::f64::consts::PI;

/// Relative offset of the probes placed on either side of a jump.
pub const JUMP_OFFSET: f64 = 1e-12;

/// Eigenvalues of two spectra closer than this (relative, floor 1) are the
/// same point; computed spectra carry errors of order `1e-13`.
pub const COINCIDENCE_TOL: f64 = 1e-10;

/// One probe of a deviation sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationSample {
    pub energy: f64,
    pub count: f64,
    pub reference: f64,
}

/// Supremum of `|count - reference|` over a probe set, against a bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub sup_deviation: f64,
    pub argmax_e: f64,
    pub bound: f64,
    pub satisfied: bool,
    pub samples: Vec<DeviationSample>,
}

impl DeviationReport {
    fn from_samples(samples: Vec<DeviationSample>, bound: f64) -> Self {
        let mut sup_deviation = 0.0;
        let mut argmax_e = samples.first().map_or(0.0, |s| s.energy);
        for s in &samples {
            let dev = (s.count - s.reference).abs();
            if dev > sup_deviation {
                sup_deviation = dev;
                argmax_e = s.energy;
            }
        }
        Self {
            sup_deviation,
            argmax_e,
            bound,
            satisfied: sup_deviation <= bound,
            samples,
        }
    }
}

/// `Σ ⌊(L_i/π) √E₊⌋`.
pub fn dirichlet_counting_closed_form(lengths: &[f64], energy: f64) -> usize {
    let k = energy.max(0.0).sqrt();
    lengths.iter().map(|l| (l / PI * k).floor() as usize).sum()
}

/// Dirichlet spectrum `(mπ/L_i)²` on `(-∞, E_max]`, coincident values merged.
pub fn dirichlet_spectrum(lengths: &[f64], e_max: f64) -> Result<Spectrum> {
    let mut values: Vec<f64> = Vec::new();
    for &l in lengths {
        let mut m = 1.0;
        loop {
            let e = (m * PI / l).powi(2);
            if e > e_max {
                break;
            }
            values.push(e);
            m += 1.0;
        }
    }
    values.sort_by(f64::total_cmp);
    let mut entries: Vec<Eigenvalue> = Vec::new();
    for v in values {
        match entries.last_mut() {
            Some(last) if (v - last.value).abs() <= 1e-12 * v => last.multiplicity += 1,
            _ => entries.push(Eigenvalue {
                value: v,
                multiplicity: 1,
            }),
        }
    }
    Spectrum::new(
        entries,
        Window {
            lo: 0.0,
            hi: e_max,
            floor_certified: true,
        },
    )
}

/// Jump-adjacent probes `λ(1 - ε)`, `λ`, `λ(1 + ε)` for every eigenvalue.
pub fn jump_probes(s: &Spectrum) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * s.entries().len());
    for e in s.entries() {
        let delta = if e.value == 0.0 {
            JUMP_OFFSET
        } else {
            JUMP_OFFSET * e.value.abs()
        };
        out.extend([e.value - delta, e.value, e.value + delta]);
    }
    out
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// `|N(E) - (Λ/π)√E₊|` over the jumps of `s` and a uniform grid of
/// `grid_count` points on `[0, hi]`, against `3K`.
pub fn weyl_deviation_of(s: &Spectrum, g: &GraphSpec, grid_count: usize) -> Result<DeviationReport> {
    let w = s.window();
    let mut probes = jump_probes(s);
    let n = grid_count.max(2);
    probes.extend((0..n).map(|i| w.hi * i as f64 / (n - 1) as f64));
    let rate = g.total_length() / PI;
    let samples = sorted_unique(probes)
        .into_iter()
        .filter(|&e| w.contains(e))
        .map(|e| {
            Ok(DeviationSample {
                energy: e,
                count: s.counting(e)? as f64,
                reference: rate * e.max(0.0).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeviationReport::from_samples(
        samples,
        3.0 * g.edge_count() as f64,
    ))
}

/// Weyl deviation of the extension `U` on `(-∞, E_max]`.
pub fn weyl_deviation(
    g: &GraphSpec,
    u: &ExtensionUnitary,
    e_max: f64,
    grid_count: usize,
) -> Result<DeviationReport> {
    let s = full_spectrum(g, u, e_max)?;
    weyl_deviation_of(&s, g, grid_count)
}

fn check_common_window(s0: &Spectrum, s1: &Spectrum) -> Result<Window> {
    let (w0, w1) = (s0.window(), s1.window());
    let same_floor = (w0.floor_certified && w1.floor_certified) || w0.lo == w1.lo;
    if w0.hi != w1.hi || !same_floor {
        return Err(Error::WindowMismatch(format!(
            "({}, {}] vs ({}, {}]",
            w0.lo, w0.hi, w1.lo, w1.hi
        )));
    }
    Ok(Window {
        lo: w0.lo.max(w1.lo),
        hi: w0.hi,
        floor_certified: w0.floor_certified && w1.floor_certified,
    })
}

/// `s1` with every eigenvalue that coincides with one of `s0` moved onto it,
/// so that numerically split coincidences do not register as jumps.
fn align(s0: &Spectrum, s1: &Spectrum) -> Result<Spectrum> {
    let w = s1.window();
    let reference: Vec<f64> = s0.entries().iter().map(|e| e.value).collect();
    let mut entries: Vec<Eigenvalue> = Vec::with_capacity(s1.entries().len());
    for e in s1.entries() {
        let i = reference.partition_point(|&x| x < e.value);
        let near = [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter_map(|j| reference.get(j).copied())
            .find(|&x| (x - e.value).abs() <= COINCIDENCE_TOL * x.abs().max(1.0));
        let value = near
            .filter(|&x| x > w.lo && x <= w.hi)
            .unwrap_or(e.value);
        match entries.last_mut() {
            Some(last) if last.value == value => last.multiplicity += e.multiplicity,
            _ => entries.push(Eigenvalue {
                value,
                multiplicity: e.multiplicity,
            }),
        }
    }
    Spectrum::new(entries, w)
}

/// `sup |N₁(E) - N₀(E)|` over `grid` and the jumps of both spectra, against `d`.
pub fn counting_diff_bound(
    s0: &Spectrum,
    s1: &Spectrum,
    d: usize,
    grid: &[f64],
) -> Result<DeviationReport> {
    let w = check_common_window(s0, s1)?;
    let s1 = &align(s0, s1)?;
    let mut probes = jump_probes(s0);
    probes.extend(jump_probes(s1));
    probes.extend_from_slice(grid);
    let samples = sorted_unique(probes)
        .into_iter()
        .filter(|&e| w.contains(e) && s0.window().contains(e) && s1.window().contains(e))
        .map(|e| {
            Ok(DeviationSample {
                energy: e,
                count: s1.counting(e)? as f64,
                reference: s0.counting(e)? as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeviationReport::from_samples(samples, d as f64))
}

/// `λ_{n+d}(A₁) ≥ λ_n(A₀)` and `λ_{n+d}(A₀) ≥ λ_n(A₁)` for every `n` with
/// `λ_{n+d}` inside the common window.
pub fn interlace_check(s0: &Spectrum, s1: &Spectrum, d: usize) -> Result<bool> {
    check_common_window(s0, s1)?;
    let (a0, a1) = (s0.expanded(), align(s0, s1)?.expanded());
    Ok(shifted_dominates(&a1, &a0, d) && shifted_dominates(&a0, &a1, d))
}

/// `upper[n + d] ≥ lower[n]` for all `n` with `n + d` in range (0-based).
/// Both sequences are complete prefixes of their spectra, so an index `n`
/// past the end of `lower` means `λ_n(lower)` lies beyond the window and
/// above `upper[n + d]`.
fn shifted_dominates(upper: &[f64], lower: &[f64], d: usize) -> bool {
    (0..upper.len().saturating_sub(d)).all(|n| n < lower.len() && upper[n + d] >= lower[n])
}

/// Total multiplicity of negative eigenvalues is at most `d`.
pub fn negative_count_check(s: &Spectrum, d: usize) -> bool {
    s.negative_multiplicity() <= d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{
        dirichlet_extension, kirchhoff_extension, make_graph, neumann_extension,
        CombinatorialGraph,
    };

    fn spectrum(values: &[(f64, usize)], hi: f64) -> Spectrum {
        Spectrum::new(
            values
                .iter()
                .map(|&(value, multiplicity)| Eigenvalue {
                    value,
                    multiplicity,
                })
                .collect(),
            Window {
                lo: -1.0,
                hi,
                floor_certified: true,
            },
        )
        .unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(dirichlet_counting_closed_form(&[PI], 4.5), 2);
        assert_eq!(dirichlet_counting_closed_form(&[PI, PI / 2.0], 4.5), 3);
        assert_eq!(dirichlet_counting_closed_form(&[0.3, 7.0], -1.0), 0);
    }

    #[test]
    fn closed_form_spectrum_merges_coincidences() {
        let s = dirichlet_spectrum(&[PI, PI / 2.0], 5.0).unwrap();
        let got: Vec<_> = s.entries().iter().map(|e| (e.value, e.multiplicity)).collect();
        assert_eq!(got.len(), 2);
        assert_eq!(got[1].1, 2);
        for e in [0.5, 1.0, 3.9, 4.0, 5.0] {
            assert_eq!(
                s.counting(e).unwrap(),
                dirichlet_counting_closed_form(&[PI, PI / 2.0], e)
            );
        }
    }

    #[test]
    fn weyl_examples() {
        let g = make_graph(&[PI]).unwrap();
        let r = weyl_deviation(&g, &dirichlet_extension(1), 100.0, 200).unwrap();
        assert!(r.satisfied && r.bound == 3.0);
        assert!(r.sup_deviation > 0.99 && r.sup_deviation <= 1.0, "{}", r.sup_deviation);

        let g = make_graph(&[PI, PI]).unwrap();
        let r = weyl_deviation(&g, &neumann_extension(2), 100.0, 200).unwrap();
        assert!(r.satisfied && r.sup_deviation <= 6.0);
    }

    #[test]
    fn dirichlet_vs_neumann_differ_by_k() {
        let g = make_graph(&[PI, PI]).unwrap();
        let s0 = full_spectrum(&g, &dirichlet_extension(2), 50.0).unwrap();
        let s1 = full_spectrum(&g, &neumann_extension(2), 50.0).unwrap();
        let r = counting_diff_bound(&s0, &s1, 4, &[]).unwrap();
        assert_eq!(r.sup_deviation, 2.0);
        assert!(r.satisfied);
        assert_eq!(counting_diff_bound(&s0, &s0, 0, &[1.0]).unwrap().sup_deviation, 0.0);
        assert!(interlace_check(&s0, &s1, 4).unwrap());
    }

    #[test]
    fn interlacing_examples() {
        let l = 2.0 * PI;
        let g = make_graph(&[l]).unwrap();
        let dir = full_spectrum(&g, &dirichlet_extension(1), 30.0).unwrap();
        let u = kirchhoff_extension(&CombinatorialGraph::cycle(1).unwrap(), 1).unwrap();
        let lp = full_spectrum(&g, &u, 30.0).unwrap();
        assert!(interlace_check(&dir, &lp, 2).unwrap());
        for d in 0..3 {
            assert!(interlace_check(&dir, &dir, d).unwrap());
        }

        let base = spectrum(&[(1.0, 1), (4.0, 1), (9.0, 1)], 10.0);
        let shifted = spectrum(&[(-0.5, 2), (1.0, 1), (4.0, 1), (9.0, 1)], 10.0);
        assert!(interlace_check(&base, &shifted, 2).unwrap());
        assert!(!interlace_check(&base, &shifted, 1).unwrap());
    }

    #[test]
    fn window_mismatch_is_reported() {
        let a = spectrum(&[(1.0, 1)], 10.0);
        let b = spectrum(&[(1.0, 1)], 11.0);
        assert!(matches!(interlace_check(&a, &b, 1), Err(Error::WindowMismatch(_))));
        assert!(matches!(
            counting_diff_bound(&a, &b, 1, &[]),
            Err(Error::WindowMismatch(_))
        ));
    }

    #[test]
    fn negative_counts() {
        let s = spectrum(&[(-0.5, 2), (0.0, 1), (3.0, 1)], 10.0);
        assert!(negative_count_check(&s, 2));
        assert!(!negative_count_check(&s, 1));
    }

    #[test]
    fn coincidences_within_tolerance_are_merged() {
        let s0 = spectrum(&[(1.0, 2), (25.0 + 2e-13, 2)], 30.0);
        let s1 = spectrum(&[(0.0, 2), (1.0, 2), (25.0 - 2e-13, 2)], 30.0);
        let r = counting_diff_bound(&s0, &s1, 2, &[]).unwrap();
        assert_eq!(r.sup_deviation, 2.0);
        let apart = spectrum(&[(0.0, 2), (1.0, 2), (24.9, 2)], 30.0);
        assert_eq!(counting_diff_bound(&s0, &apart, 2, &[]).unwrap().sup_deviation, 4.0);
    }

    #[test]
    fn probes_straddle_zero() {
        let s = spectrum(&[(0.0, 1)], 1.0);
        assert_eq!(jump_probes(&s), vec![-1e-12, 0.0, 1e-12]);
    }
}
