//! Eigenvalues of a quantum-graph extension in a window.
//!
//! Positive eigenvalues are located in `k = √E`, negative ones in
//! `κ = √-E`. On a uniform grid of step `π/(4Λ)` (geometric far out on the
//! negative side) the normalized smallest singular value of the secular
//! matrix is sampled, every local minimum is refined, and minima below the
//! acceptance threshold become eigenvalues whose multiplicity is the number
//! of normalized singular values below the multiplicity threshold.
//!
//! Each grid cell is then certified against the spectral-flow count of
//! [`crate::flow`]. A cell whose roots do not add up is rescanned at half
//! and then quarter step; if that still fails the cell is bisected, guided
//! by the flow count at each midpoint, until every piece is accounted for.

use crate::flow::{FlowCount, FlowCounter};
use crate::graph::{ExtensionUnitary, GraphSpec};
use crate::optimize::brent_minimize;
use crate::secular::{normalized_singular_values, scan_matrix};
use crate::spectrum::{Eigenvalue, Spectrum, Window};
use crate::{Error, Result};
use std::f64::consts::PI;

/// Tunable thresholds of the scan.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// A refined minimum below this normalized singular value is an eigenvalue.
    pub accept: f64,
    /// Normalized singular values below this count towards the multiplicity.
    pub multiplicity: f64,
    /// Grid step as a fraction of the mean root spacing `π/Λ` in `k`.
    pub step_fraction: f64,
    /// Relative tolerance `|Δt| ≤ tol (1 + t)` of the refinement.
    pub refine_tol: f64,
    /// Rescans of a failing cell, each at half the previous step.
    pub max_rescans: usize,
    /// Upper limit on doublings of the negative search floor.
    pub max_floor_doublings: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            accept: 1e-8,
            multiplicity: 1e-6,
            step_fraction: 0.25,
            refine_tol: 1e-13,
            max_rescans: 2,
            max_floor_doublings: 400,
        }
    }
}

/// Samples per piece when a cell is split by bisection.
const BISECT_SAMPLES: usize = 8;
/// Depth limit of the bisection.
const MAX_BISECTIONS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    /// `E = t²`
    Positive,
    /// `E = -t²`
    Negative,
}

impl Branch {
    fn energy(self, t: f64) -> f64 {
        match self {
            Branch::Positive => t * t,
            Branch::Negative => -t * t,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Root {
    energy: f64,
    t: f64,
    multiplicity: usize,
    sigma: f64,
}

/// One sampled grid point.
#[derive(Debug, Clone, Copy)]
struct Sample {
    t: f64,
    sigma: f64,
    flow: FlowCount,
}

/// Scanner for a fixed graph and extension.
pub struct SpectralSolver {
    graph: GraphSpec,
    unitary: ExtensionUnitary,
    config: SolverConfig,
    flow: FlowCounter,
    zero_is_eigenvalue: bool,
}

impl SpectralSolver {
    pub fn new(g: &GraphSpec, u: &ExtensionUnitary) -> Result<Self> {
        Self::with_config(g, u, SolverConfig::default())
    }

    pub fn with_config(g: &GraphSpec, u: &ExtensionUnitary, config: SolverConfig) -> Result<Self> {
        u.check_graph(g)?;
        let zero_sigma = normalized_singular_values(&scan_matrix(0.0, g, u))[0];
        Ok(Self {
            graph: g.clone(),
            unitary: u.clone(),
            flow: FlowCounter::new(g, u)?,
            zero_is_eigenvalue: zero_sigma < config.multiplicity,
            config,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    fn base_step(&self) -> f64 {
        self.config.step_fraction * PI / self.graph.total_length()
    }

    fn singular_values(&self, energy: f64) -> Vec<f64> {
        normalized_singular_values(&scan_matrix(energy, &self.graph, &self.unitary))
    }

    fn sigma(&self, energy: f64) -> f64 {
        self.singular_values(energy)[0]
    }

    /// Multiplicity of `E` by direct kernel test.
    pub fn kernel_dimension(&self, energy: f64) -> usize {
        self.singular_values(energy)
            .iter()
            .filter(|&&s| s < self.config.multiplicity)
            .count()
    }

    /// Samples `ts`, moving interior points off eigenvalues so that the flow
    /// count there is unambiguous. Points at `t = 0` are kept: the flow count
    /// at `E = 0` is inclusive, which is what the cell bookkeeping expects.
    fn sample(&self, branch: Branch, ts: &[f64]) -> Result<Vec<Sample>> {
        let mut out: Vec<Sample> = Vec::with_capacity(ts.len());
        for (j, &t0) in ts.iter().enumerate() {
            let mut t = t0;
            let mut flow = self.flow.count(branch.energy(t))?;
            if t0 > 0.0 && flow.on_eigenvalue > 0 {
                let prev = if j > 0 { out[j - 1].t } else { 0.0 };
                let next = ts.get(j + 1).copied().unwrap_or(t0);
                let room = (t0 - prev).min(if next > t0 { next - t0 } else { t0 - prev });
                let mut attempt = 1;
                while flow.on_eigenvalue > 0 {
                    if attempt > 8 {
                        return Err(Error::ScanInconsistency(format!(
                            "could not move grid point off eigenvalue near E = {}",
                            branch.energy(t0)
                        )));
                    }
                    let shift = room * 1e-3 * attempt as f64;
                    t = if attempt % 2 == 1 { t0 - shift } else { t0 + shift };
                    flow = self.flow.count(branch.energy(t))?;
                    attempt += 1;
                }
            }
            out.push(Sample {
                t,
                sigma: self.sigma(branch.energy(t)),
                flow,
            });
        }
        Ok(out)
    }

    /// A minimum at small `t` that is the zero mode seen off-centre: σ is
    /// quadratic in `t` there, so the refinement stops short of `t = 0`.
    fn is_zero_mode(&self, branch: Branch, t: f64) -> bool {
        self.zero_is_eigenvalue
            && t < self.base_step()
            && (t == 0.0 || self.sigma(branch.energy(0.5 * t)) < self.config.multiplicity)
    }

    /// Refines every local minimum of the sampled σ and keeps the roots.
    fn roots_from_samples(&self, branch: Branch, samples: &[Sample]) -> Result<Vec<Root>> {
        let n = samples.len();
        let mut roots: Vec<Root> = Vec::new();
        for j in 0..n {
            let s = samples[j].sigma;
            let left_ok = j == 0 || s <= samples[j - 1].sigma;
            let right_ok = j + 1 == n || s <= samples[j + 1].sigma;
            if !(left_ok && right_ok) {
                continue;
            }
            let lo = samples[j.saturating_sub(1)].t;
            let hi = samples[(j + 1).min(n - 1)].t;
            let tol = self.config.refine_tol * (1.0 + samples[j].t);
            let (t, s2) = if hi > lo {
                brent_minimize(
                    |t| {
                        let s = self.sigma(branch.energy(t));
                        s * s
                    },
                    lo,
                    hi,
                    tol,
                    400,
                )
            } else {
                (samples[j].t, s * s)
            };
            let sigma = s2.sqrt();
            let energy = branch.energy(t);
            if self.is_zero_mode(branch, t) {
                continue;
            }
            // An end sample that only looks minimal because σ keeps falling
            // past the sampled range; the neighbouring cell owns that root.
            let at_edge = (j == 0 || j + 1 == n)
                && hi > lo
                && (t - samples[j].t).abs() <= 1e-6 * (hi - lo);
            if sigma < self.config.accept {
                roots.push(Root {
                    energy,
                    t,
                    multiplicity: self.kernel_dimension(energy).max(1),
                    sigma,
                });
            } else if sigma < self.config.multiplicity && !at_edge {
                return Err(Error::UnresolvedCluster { energy, sigma });
            }
        }
        roots.sort_by(|a, b| a.t.total_cmp(&b.t));
        let mut merged: Vec<Root> = Vec::with_capacity(roots.len());
        for r in roots {
            if let Some(last) = merged.last_mut() {
                if (r.t - last.t).abs() <= 1e-9 * (1.0 + r.t) {
                    if r.sigma < last.sigma {
                        *last = r;
                    }
                    continue;
                }
            }
            merged.push(r);
        }
        Ok(merged)
    }

    /// Energy interval `(lo, hi]` covered by the cell between two samples.
    fn cell_energies(branch: Branch, a: &Sample, b: &Sample) -> (f64, f64) {
        let (ea, eb) = (branch.energy(a.t), branch.energy(b.t));
        (ea.min(eb), ea.max(eb))
    }

    fn expected_in_cell(a: &Sample, b: &Sample) -> usize {
        a.flow.count.abs_diff(b.flow.count)
    }

    fn found_in_cell(roots: &[Root], lo: f64, hi: f64) -> usize {
        roots
            .iter()
            .filter(|r| r.energy > lo && r.energy <= hi)
            .map(|r| r.multiplicity)
            .sum()
    }

    /// Scans a grid and certifies every cell; `extra` roots (the zero mode)
    /// take part in the bookkeeping but are not searched for.
    fn scan_grid(&self, branch: Branch, ts: &[f64], extra: &[Root]) -> Result<(Vec<Root>, Vec<Sample>)> {
        let samples = self.sample(branch, ts)?;
        let mut roots = self.roots_from_samples(branch, &samples)?;
        let in_range = |r: &Root, samples: &[Sample]| {
            let (lo, _) = Self::cell_energies(branch, &samples[0], &samples[0]);
            let (_, hi) =
                Self::cell_energies(branch, &samples[0], &samples[samples.len() - 1]);
            let lo = lo.min(branch.energy(samples[samples.len() - 1].t));
            r.energy > lo && r.energy <= hi
        };
        roots.retain(|r| in_range(r, &samples) && r.energy != 0.0);

        for j in 0..samples.len().saturating_sub(1) {
            let (lo, hi) = Self::cell_energies(branch, &samples[j], &samples[j + 1]);
            let expected = Self::expected_in_cell(&samples[j], &samples[j + 1]);
            let count = |roots: &[Root]| {
                Self::found_in_cell(roots, lo, hi) + Self::found_in_cell(extra, lo, hi)
            };
            if count(&roots) == expected {
                continue;
            }
            let mut resolved = false;
            for rescan in 1..=self.config.max_rescans {
                let a = samples[j.saturating_sub(1)].t;
                let b = samples[(j + 2).min(samples.len() - 1)].t;
                let step = (samples[j + 1].t - samples[j].t).abs() / (1usize << rescan) as f64;
                let pieces = ((b - a) / step).ceil().max(1.0) as usize;
                let sub: Vec<f64> = (0..=pieces)
                    .map(|i| a + (b - a) * i as f64 / pieces as f64)
                    .collect();
                let sub_samples = self.sample(branch, &sub)?;
                let mut local = self.roots_from_samples(branch, &sub_samples)?;
                local.retain(|r| r.energy > lo && r.energy <= hi && r.energy != 0.0);
                if Self::found_in_cell(&local, lo, hi) + Self::found_in_cell(extra, lo, hi)
                    == expected
                {
                    roots.retain(|r| !(r.energy > lo && r.energy <= hi));
                    roots.extend(local);
                    roots.sort_by(|x, y| x.t.total_cmp(&y.t));
                    resolved = true;
                    break;
                }
            }
            if !resolved {
                let pinned = Self::found_in_cell(extra, lo, hi);
                let wanted = expected.checked_sub(pinned).ok_or_else(|| {
                    Error::ScanInconsistency(format!(
                        "cell ({lo}, {hi}] holds {expected} eigenvalues by spectral flow, fewer than the {pinned} at E = 0"
                    ))
                })?;
                let local = self.bisect_cell(branch, samples[j], samples[j + 1], wanted, 0)?;
                roots.retain(|r| !(r.energy > lo && r.energy <= hi));
                roots.extend(local);
                roots.sort_by(|x, y| x.t.total_cmp(&y.t));
            }
        }
        Ok((roots, samples))
    }

    /// Splits a cell at its midpoint until every piece holds as many roots
    /// as the flow count says. `wanted` excludes a zero mode at the edge.
    fn bisect_cell(
        &self,
        branch: Branch,
        a: Sample,
        b: Sample,
        wanted: usize,
        depth: usize,
    ) -> Result<Vec<Root>> {
        if wanted == 0 {
            return Ok(Vec::new());
        }
        let (lo, hi) = Self::cell_energies(branch, &a, &b);
        let ts: Vec<f64> = (0..=BISECT_SAMPLES)
            .map(|i| a.t + (b.t - a.t) * i as f64 / BISECT_SAMPLES as f64)
            .collect();
        let inner = self.sample(branch, &ts)?;
        let mut local = self.roots_from_samples(branch, &inner)?;
        local.retain(|r| r.energy > lo && r.energy <= hi && r.energy != 0.0);
        if Self::found_in_cell(&local, lo, hi) == wanted {
            return Ok(local);
        }
        if depth >= MAX_BISECTIONS {
            return Err(Error::ScanInconsistency(format!(
                "cell ({lo}, {hi}] holds {wanted} eigenvalues by spectral flow but the scan found {}",
                Self::found_in_cell(&local, lo, hi)
            )));
        }
        let mid = inner[BISECT_SAMPLES / 2];
        let left = Self::expected_in_cell(&a, &mid);
        let right = Self::expected_in_cell(&mid, &b);
        // A zero mode pinned at a = 0 sits in the left half.
        let pinned_left = (left + right).saturating_sub(wanted);
        let mut out = self.bisect_cell(branch, a, mid, left - pinned_left.min(left), depth + 1)?;
        out.extend(self.bisect_cell(branch, mid, b, right, depth + 1)?);
        Ok(out)
    }

    /// All eigenvalues in `(0, E_max]`.
    pub fn scan_positive(&self, e_max: f64) -> Result<Spectrum> {
        if !(e_max > 0.0) || !e_max.is_finite() {
            return Err(Error::InvalidArgument(format!("E_max = {e_max} must be positive")));
        }
        let k_max = e_max.sqrt();
        let step = self.base_step();
        let pieces = (k_max / step).ceil().max(1.0) as usize;
        let mut ts: Vec<f64> = (0..pieces).map(|j| j as f64 * step).collect();
        ts.push(k_max);

        let (roots, samples) = self.scan_grid(Branch::Positive, &ts, &[])?;
        // The endpoint must be the exact window edge, not a nudged point.
        let last = samples.last().expect("grid is nonempty");
        let entries: Vec<Eigenvalue> = roots
            .iter()
            .filter(|r| r.energy <= e_max)
            .map(|r| Eigenvalue {
                value: r.energy,
                multiplicity: r.multiplicity,
            })
            .collect();
        if last.t != k_max {
            // Eigenvalue (numerically) at E_max: the nudged endpoint moved
            // below it, so probe the remaining sliver directly.
            let extra = self.kernel_dimension(e_max);
            if extra > 0 && !entries.iter().any(|e| e.value == e_max) {
                return self.finish_positive(entries, Some((e_max, extra)), &samples, e_max);
            }
        }
        self.finish_positive(entries, None, &samples, e_max)
    }

    fn finish_positive(
        &self,
        mut entries: Vec<Eigenvalue>,
        top: Option<(f64, usize)>,
        samples: &[Sample],
        e_max: f64,
    ) -> Result<Spectrum> {
        if let Some((value, multiplicity)) = top {
            entries.push(Eigenvalue {
                value,
                multiplicity,
            });
        }
        let spectrum = Spectrum::new(
            entries,
            Window {
                lo: 0.0,
                hi: e_max,
                floor_certified: false,
            },
        )?;
        self.weyl_sanity(&spectrum, samples)?;
        Ok(spectrum)
    }

    /// `|N(E) - (Λ/π)√E₊| ≤ 3K` at every grid energy.
    fn weyl_sanity(&self, positive: &Spectrum, samples: &[Sample]) -> Result<()> {
        let below = self.flow.count(0.0)?.count;
        let k = self.graph.edge_count() as f64;
        let lambda = self.graph.total_length();
        for s in samples {
            let e = s.t * s.t;
            if e <= 0.0 || e > positive.window().hi {
                continue;
            }
            let n = below + positive.counting(e)?;
            let dev = (n as f64 - lambda / PI * e.sqrt()).abs();
            if dev > 3.0 * k {
                return Err(Error::ScanInconsistency(format!(
                    "N({e}) = {n} deviates from the Weyl term by {dev} > 3K"
                )));
            }
        }
        Ok(())
    }

    /// Grid on `[a, b]` in `κ`: uniform step near zero, geometric further out.
    fn negative_grid(&self, a: f64, b: f64) -> Vec<f64> {
        let step = self.base_step();
        let mut ts = vec![a];
        let mut t = a;
        loop {
            t += step.max(t / 16.0);
            if t >= b {
                break;
            }
            ts.push(t);
        }
        ts.push(b);
        ts
    }

    /// All eigenvalues `≤ 0`, including a zero mode.
    pub fn scan_negative(&self) -> Result<Spectrum> {
        let cap = self.unitary.deficiency_index();
        let zero_mult = self.kernel_dimension(0.0);
        let zero = Root {
            energy: 0.0,
            t: 0.0,
            multiplicity: zero_mult,
            sigma: 0.0,
        };
        let extra: Vec<Root> = if zero_mult > 0 { vec![zero] } else { vec![] };

        let mut floor = self.graph.total_length().powi(-2);
        let mut kappa_prev = 0.0;
        let mut roots: Vec<Root> = Vec::new();
        let mut quiet_doublings = 0usize;
        for doubling in 0..=self.config.max_floor_doublings {
            let kappa = floor.sqrt();
            let ts = self.negative_grid(kappa_prev, kappa);
            let segment_extra: &[Root] = if kappa_prev == 0.0 { &extra } else { &[] };
            let (new_roots, samples) = self.scan_grid(Branch::Negative, &ts, segment_extra)?;
            let found_new = !new_roots.is_empty();
            roots.extend(new_roots);
            let negatives: usize = roots.iter().map(|r| r.multiplicity).sum();
            if negatives > cap {
                return Err(Error::NegativeCapExceeded {
                    count: negatives,
                    cap,
                });
            }
            quiet_doublings = if found_new { 0 } else { quiet_doublings + 1 };
            let monotone = samples
                .windows(3)
                .all(|w| !(w[1].sigma <= w[0].sigma && w[1].sigma <= w[2].sigma));
            let nothing_below = self.flow.count(-floor)?.count == 0;
            if doubling > 0 && quiet_doublings >= 3 && monotone && nothing_below {
                break;
            }
            if doubling == self.config.max_floor_doublings {
                return Err(Error::ScanInconsistency(format!(
                    "negative search floor {floor:e} reached without certifying completeness"
                )));
            }
            kappa_prev = kappa;
            floor *= 2.0;
        }

        let mut entries: Vec<Eigenvalue> = roots
            .iter()
            .map(|r| Eigenvalue {
                value: r.energy,
                multiplicity: r.multiplicity,
            })
            .collect();
        if zero_mult > 0 {
            entries.push(Eigenvalue {
                value: 0.0,
                multiplicity: zero_mult,
            });
        }
        Spectrum::new(
            entries,
            Window {
                lo: -floor,
                hi: 0.0,
                floor_certified: true,
            },
        )
    }

    /// Negative and positive parts joined on `(-E_floor, E_max]`.
    pub fn full_spectrum(&self, e_max: f64) -> Result<Spectrum> {
        let negative = self.scan_negative()?;
        let positive = self.scan_positive(e_max)?;
        negative.concat(&positive)
    }
}

pub fn scan_positive(g: &GraphSpec, u: &ExtensionUnitary, e_max: f64) -> Result<Spectrum> {
    SpectralSolver::new(g, u)?.scan_positive(e_max)
}

pub fn scan_negative(g: &GraphSpec, u: &ExtensionUnitary) -> Result<Spectrum> {
    SpectralSolver::new(g, u)?.scan_negative()
}

pub fn full_spectrum(g: &GraphSpec, u: &ExtensionUnitary, e_max: f64) -> Result<Spectrum> {
    SpectralSolver::new(g, u)?.full_spectrum(e_max)
}
