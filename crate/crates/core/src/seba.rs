//! Dirichlet rectangle `[0, a] × [0, b]` with one point perturbation.
//!
//! The base modes are `φ_mn = (2/√(ab)) sin(mπx/a) sin(nπy/b)` with
//! `λ_mn = π²(m²/a² + n²/b²)`. Eigenvalues of the perturbed operator are the
//! roots of `ξ(E) = c` for
//!
//! ```text
//! ξ(E) = Σ w_mn (1/(λ_mn - E) - λ_mn/(1 + λ_mn²)),   w_mn = |φ_mn(p)|²,
//! ```
//!
//! together with the base eigenvalues the point does not see: modes of zero
//! weight, and all but one dimension of each degenerate eigenspace.
//!
//! `ξ` is summed row by row. For fixed `m` the sum over `n` is the Dirichlet
//! Green's function of `-d²/dy² - z` on `[0, b]` at `(y, y)`, with
//! `z = E - μ_m`, `μ_m = (mπ/a)²`, and the regularizing term is the real
//! part of the same function at `z = i - μ_m`. Rows with `μ_m + ν_1` above
//! the cutoff `R · max(|E|, λ₁)` are dropped; doubling `R` certifies the
//! truncation.

use crate::comparison::{counting_diff_bound, DeviationReport};
use crate::optimize::brent_root;
use crate::spectrum::{Eigenvalue, Spectrum, Window};
use crate::{Error, Result, C64};
use std::f64::consts::PI;

/// Modes with `sin² · sin²` below this are nodal and carry zero weight.
pub const NODAL_TOL: f64 = 1e-20;
/// Relative distance below which base eigenvalues are merged into one group.
pub const GROUP_TOL: f64 = 1e-12;
/// Relative distance to a weighted pole at which `ξ` is not evaluated.
pub const POLE_TOL: f64 = 1e-12;
/// Largest relative root shift tolerated when the truncation is doubled.
pub const STABILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SebaSpec {
    pub sides: (f64, f64),
    pub point: (f64, f64),
    pub coupling: f64,
    pub truncation_ratio: f64,
}

impl SebaSpec {
    pub fn new(sides: (f64, f64), point: (f64, f64), coupling: f64, truncation_ratio: f64) -> Result<Self> {
        let (a, b) = sides;
        let (x, y) = point;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("sides ({a}, {b}) must be positive")));
        }
        if !(x > 0.0 && x < a && y > 0.0 && y < b) {
            return Err(Error::InvalidArgument(format!(
                "point ({x}, {y}) is not inside the rectangle"
            )));
        }
        if !coupling.is_finite() {
            return Err(Error::InvalidArgument("coupling must be finite".into()));
        }
        if !(truncation_ratio >= 100.0) || !truncation_ratio.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "truncation ratio {truncation_ratio} must be at least 100"
            )));
        }
        Ok(Self {
            sides,
            point,
            coupling,
            truncation_ratio,
        })
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        Self { coupling, ..*self }
    }

    pub fn with_point(&self, point: (f64, f64)) -> Result<Self> {
        Self::new(self.sides, point, self.coupling, self.truncation_ratio)
    }

    pub fn with_truncation(&self, truncation_ratio: f64) -> Result<Self> {
        Self::new(self.sides, self.point, self.coupling, truncation_ratio)
    }

    /// Lowest base eigenvalue `π²(1/a² + 1/b²)`.
    pub fn first_eigenvalue(&self) -> f64 {
        let (a, b) = self.sides;
        PI * PI * (1.0 / (a * a) + 1.0 / (b * b))
    }

    fn sin2_x(&self, m: usize) -> f64 {
        nodal_cut((m as f64 * PI * self.point.0 / self.sides.0).sin().powi(2))
    }

    fn sin2_y(&self, n: usize) -> f64 {
        nodal_cut((n as f64 * PI * self.point.1 / self.sides.1).sin().powi(2))
    }
}

fn nodal_cut(s2: f64) -> f64 {
    if s2 < NODAL_TOL {
        0.0
    } else {
        s2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseMode {
    pub m: usize,
    pub n: usize,
    pub lambda: f64,
    pub weight: f64,
}

/// Base modes sharing one eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseGroup {
    pub lambda: f64,
    pub multiplicity: usize,
    pub weight: f64,
    pub modes: Vec<BaseMode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseSpectrum {
    pub groups: Vec<BaseGroup>,
    /// Some group has multiplicity above one.
    pub degenerate: bool,
}

impl BaseSpectrum {
    pub fn total_multiplicity(&self) -> usize {
        self.groups.iter().map(|g| g.multiplicity).sum()
    }

    /// As a spectrum complete on `(-∞, hi]`.
    pub fn to_spectrum(&self, hi: f64) -> Result<Spectrum> {
        Spectrum::new(
            self.groups
                .iter()
                .filter(|g| g.lambda <= hi)
                .map(|g| Eigenvalue {
                    value: g.lambda,
                    multiplicity: g.multiplicity,
                })
                .collect(),
            Window {
                lo: 0.0,
                hi,
                floor_certified: true,
            },
        )
    }
}

/// All modes with `λ ≤ lambda_max`, grouped by eigenvalue.
pub fn base_spectrum(spec: &SebaSpec, lambda_max: f64) -> Result<BaseSpectrum> {
    let first = spec.first_eigenvalue();
    if !(lambda_max >= first) {
        return Err(Error::InvalidArgument(format!(
            "lambda_max {lambda_max} is below the first eigenvalue {first}"
        )));
    }
    let (a, b) = spec.sides;
    let scale = 4.0 / (a * b);
    let mut modes = Vec::new();
    for m in 1.. {
        let mu = (m as f64 * PI / a).powi(2);
        if mu + (PI / b).powi(2) > lambda_max {
            break;
        }
        let sx = spec.sin2_x(m);
        for n in 1.. {
            let lambda = mu + (n as f64 * PI / b).powi(2);
            if lambda > lambda_max {
                break;
            }
            modes.push(BaseMode {
                m,
                n,
                lambda,
                weight: scale * nodal_cut(sx * spec.sin2_y(n)),
            });
        }
    }
    modes.sort_by(|p, q| p.lambda.total_cmp(&q.lambda));
    let mut groups: Vec<BaseGroup> = Vec::new();
    for mode in modes {
        match groups.last_mut() {
            Some(g) if (mode.lambda - g.lambda).abs() <= GROUP_TOL * mode.lambda => {
                g.multiplicity += 1;
                g.weight += mode.weight;
                g.modes.push(mode);
            }
            _ => groups.push(BaseGroup {
                lambda: mode.lambda,
                multiplicity: 1,
                weight: mode.weight,
                modes: vec![mode],
            }),
        }
    }
    let degenerate = groups.iter().any(|g| g.multiplicity > 1);
    Ok(BaseSpectrum { groups, degenerate })
}

/// Smallest `λ` with at least `count` base eigenvalues `≤ λ`.
pub fn nth_base_eigenvalue(spec: &SebaSpec, count: usize) -> Result<f64> {
    let (a, b) = spec.sides;
    // Weyl estimate plus margin, enlarged until enough modes are present.
    let mut lambda_max = spec.first_eigenvalue() + 8.0 * PI * (count as f64 + 10.0) / (a * b);
    loop {
        let base = base_spectrum(spec, lambda_max)?;
        let mut seen = 0;
        for g in &base.groups {
            seen += g.multiplicity;
            if seen >= count {
                return Ok(g.lambda);
            }
        }
        lambda_max *= 2.0;
    }
}

/// `G_z(y, y)` for `-d²/dy² - z` on `[0, b]` with Dirichlet ends, `z` real.
fn green_real(z: f64, y: f64, b: f64) -> f64 {
    let r = b - y;
    if z.abs() * b * b < 1e-6 {
        y * r / b + z * y * y * r * r / (3.0 * b)
    } else if z > 0.0 {
        let q = z.sqrt();
        (q * y).sin() * (q * r).sin() / (q * (q * b).sin())
    } else {
        let w = (-z).sqrt();
        (-(-2.0 * w * y).exp_m1()) * (-(-2.0 * w * r).exp_m1()) / (2.0 * w * (-(-2.0 * w * b).exp_m1()))
    }
}

/// `G_z(y, y)` for complex `z` off the real axis.
fn green_complex(z: C64, y: f64, b: f64) -> C64 {
    let q = z.sqrt();
    let q = if q.im < 0.0 { -q } else { q };
    let i = C64::i();
    let e = |t: f64| (i * q * (2.0 * t)).exp();
    i * (C64::new(1.0, 0.0) - e(y)) * (C64::new(1.0, 0.0) - e(b - y))
        / (q * 2.0 * (C64::new(1.0, 0.0) - e(b)))
}

#[derive(Debug, Clone, Copy)]
struct Row {
    mu: f64,
    factor: f64,
    regularizer: f64,
}

/// Row data of `ξ` for one spec, extended on demand.
#[derive(Debug, Clone)]
pub struct XiEvaluator {
    spec: SebaSpec,
    rows: Vec<Row>,
    first: f64,
}

impl XiEvaluator {
    pub fn new(spec: &SebaSpec) -> Self {
        Self {
            spec: *spec,
            rows: Vec::new(),
            first: spec.first_eigenvalue(),
        }
    }

    /// Truncation cutoff at energy `E` for ratio `R`.
    pub fn cutoff(&self, energy: f64, ratio: f64) -> f64 {
        ratio * energy.abs().max(self.first)
    }

    fn rows_up_to(&mut self, cutoff: f64) -> usize {
        let (a, b) = self.spec.sides;
        let nu1 = (PI / b).powi(2);
        loop {
            let m = self.rows.len() + 1;
            let mu = (m as f64 * PI / a).powi(2);
            if mu + nu1 > cutoff {
                break;
            }
            let factor = 2.0 / a * self.spec.sin2_x(m);
            let regularizer = if factor == 0.0 {
                0.0
            } else {
                green_complex(C64::new(-mu, 1.0), self.spec.point.1, b).re
            };
            self.rows.push(Row {
                mu,
                factor,
                regularizer,
            });
        }
        let nu1_cut = cutoff - nu1;
        self.rows.partition_point(|r| r.mu <= nu1_cut)
    }

    /// Nearest weighted base eigenvalue within the pole tolerance of `E`.
    fn near_pole(&self, energy: f64, rows: usize) -> Option<f64> {
        let b = self.spec.sides.1;
        for (idx, row) in self.rows[..rows].iter().enumerate() {
            if row.factor == 0.0 || energy <= row.mu {
                continue;
            }
            let n = ((energy - row.mu).sqrt() * b / PI).round() as usize;
            if n == 0 {
                continue;
            }
            let lambda = row.mu + (n as f64 * PI / b).powi(2);
            let weight = nodal_cut(self.spec.sin2_x(idx + 1) * self.spec.sin2_y(n));
            if weight > 0.0 && (energy - lambda).abs() < POLE_TOL * lambda {
                return Some(lambda);
            }
        }
        None
    }

    /// `ξ(E)` truncated at the given cutoff.
    pub fn eval_with_cutoff(&mut self, energy: f64, cutoff: f64) -> Result<f64> {
        let rows = self.rows_up_to(cutoff);
        if let Some(pole) = self.near_pole(energy, rows) {
            return Err(Error::PoleProximity { energy, pole });
        }
        Ok(self.sum_rows(energy, rows))
    }

    fn sum_rows(&self, energy: f64, rows: usize) -> f64 {
        let (y, b) = (self.spec.point.1, self.spec.sides.1);
        self.rows[..rows]
            .iter()
            .filter(|r| r.factor != 0.0)
            .map(|r| r.factor * (green_real(energy - r.mu, y, b) - r.regularizer))
            .sum()
    }

    /// `ξ(E)` with the cutoff `R · max(|E|, λ₁)` of the spec.
    pub fn eval(&mut self, energy: f64) -> Result<f64> {
        let cutoff = self.cutoff(energy, self.spec.truncation_ratio);
        self.eval_with_cutoff(energy, cutoff)
    }

    /// Root of `ξ = c` in `(lo, hi)` at a fixed cutoff; `ξ` increases there.
    fn root_in(&mut self, lo: f64, hi: f64, cutoff: f64) -> Result<f64> {
        let rows = self.rows_up_to(cutoff);
        let c = self.spec.coupling;
        let f_lo = self.sum_rows(lo, rows) - c;
        let f_hi = self.sum_rows(hi, rows) - c;
        if !(f_lo < 0.0 && f_hi > 0.0) {
            return Err(Error::ScanInconsistency(format!(
                "xi - c does not change sign on ({lo}, {hi}): {f_lo}, {f_hi}"
            )));
        }
        let tol = 1e-13 * lo.abs().max(hi.abs()).max(1.0);
        Ok(brent_root(|e| self.sum_rows(e, rows) - c, lo, hi, f_lo, f_hi, tol, 200))
    }

    /// The root below the lowest weighted pole.
    fn lowest_root(&mut self, pole: f64, ratio: f64) -> Result<f64> {
        let c = self.spec.coupling;
        let hi = pole * (1.0 - 1e-10);
        let mut step = 1.0;
        let mut lo = pole - step;
        loop {
            let cutoff = self.cutoff(lo, ratio);
            let rows = self.rows_up_to(cutoff);
            if self.sum_rows(lo, rows) < c {
                return self.root_in(lo, hi, cutoff);
            }
            step *= 2.0;
            lo = pole - step;
            if step > 1e300 {
                return Err(Error::ScanInconsistency(
                    "no root of xi = c below the first pole".into(),
                ));
            }
        }
    }

    /// Roots of `ξ = c` at truncation ratio `ratio`: one below `poles[0]`
    /// and one in each gap between consecutive poles.
    fn roots(&mut self, poles: &[f64], ratio: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(poles.len());
        out.push(self.lowest_root(poles[0], ratio)?);
        for pair in poles.windows(2) {
            let lo = pair[0] * (1.0 + 1e-10);
            let hi = pair[1] * (1.0 - 1e-10);
            let cutoff = self.cutoff(pair[1], ratio);
            out.push(self.root_in(lo, hi, cutoff)?);
        }
        Ok(out)
    }
}

/// `ξ(E)` for the spec.
pub fn xi(energy: f64, spec: &SebaSpec) -> Result<f64> {
    XiEvaluator::new(spec).eval(energy)
}

/// Perturbed and base spectra on `(-∞, E_max]`.
#[derive(Debug, Clone)]
pub struct SebaSolution {
    pub perturbed: Spectrum,
    pub base: Spectrum,
    /// Distinct base eigenvalues of positive weight, through the first above `E_max`.
    pub poles: Vec<f64>,
    /// Largest relative root shift between ratios `R` and `2R`.
    pub truncation_shift: f64,
    pub degenerate: bool,
}

impl SebaSolution {
    /// `sup |N - N₀|` against the bound `1`.
    pub fn deviation(&self) -> Result<DeviationReport> {
        counting_diff_bound(&self.base, &self.perturbed, 1, &[])
    }

    /// Gaps between consecutive poles inside the window that do not hold
    /// exactly one eigenvalue of the perturbed operator beyond the
    /// persisting base ones.
    pub fn gap_violations(&self) -> usize {
        let hi = self.perturbed.window().hi;
        let mut violations = 0;
        for pair in self.poles.windows(2) {
            if pair[1] > hi {
                break;
            }
            let new_roots = self.new_roots_in(pair[0], pair[1]);
            if new_roots != 1 {
                violations += 1;
            }
        }
        violations
    }

    /// Perturbed eigenvalues strictly between `lo` and `hi` that are not
    /// base eigenvalues.
    fn new_roots_in(&self, lo: f64, hi: f64) -> usize {
        let base: Vec<f64> = self.base.entries().iter().map(|e| e.value).collect();
        self.perturbed
            .entries()
            .iter()
            .filter(|e| e.value > lo && e.value < hi && !base.contains(&e.value))
            .map(|e| e.multiplicity)
            .sum()
    }
}

/// Solves for the perturbed spectrum and certifies it against doubling `R`.
pub fn seba_solve(spec: &SebaSpec, e_max: f64) -> Result<SebaSolution> {
    if !e_max.is_finite() || e_max <= 0.0 {
        return Err(Error::InvalidArgument(format!("E_max = {e_max} must be positive")));
    }
    let mut reach = e_max.max(spec.first_eigenvalue()) * 1.5 + 50.0;
    let base = loop {
        let base = base_spectrum(spec, reach)?;
        if base.groups.iter().any(|g| g.lambda > e_max && g.weight > 0.0) {
            break base;
        }
        reach *= 2.0;
    };
    let mut poles = Vec::new();
    for g in &base.groups {
        if g.weight > 0.0 {
            poles.push(g.lambda);
            if g.lambda > e_max {
                break;
            }
        }
    }

    let mut eval = XiEvaluator::new(spec);
    let ratio = spec.truncation_ratio;
    let roots = eval.roots(&poles, ratio)?;
    let check = eval.roots(&poles, 2.0 * ratio)?;
    let first = spec.first_eigenvalue();
    let mut shift: f64 = 0.0;
    for (r, s) in roots.iter().zip(&check) {
        let rel = (r - s).abs() / r.abs().max(first);
        shift = shift.max(rel);
        if rel > STABILITY_TOL {
            return Err(Error::TruncationUnstable {
                root: *r,
                shift: rel,
            });
        }
    }

    let mut entries: Vec<Eigenvalue> = roots
        .iter()
        .filter(|&&r| r <= e_max)
        .map(|&value| Eigenvalue {
            value,
            multiplicity: 1,
        })
        .collect();
    for g in base.groups.iter().filter(|g| g.lambda <= e_max) {
        let persisting = if g.weight > 0.0 {
            g.multiplicity - 1
        } else {
            g.multiplicity
        };
        if persisting > 0 {
            entries.push(Eigenvalue {
                value: g.lambda,
                multiplicity: persisting,
            });
        }
    }
    let lowest = roots[0].min(0.0);
    let window = Window {
        lo: lowest - 1.0,
        hi: e_max,
        floor_certified: true,
    };
    let perturbed = Spectrum::new(entries, window)?;
    let base_spec = Spectrum::new(
        base.to_spectrum(e_max)?.entries().to_vec(),
        window,
    )?;
    Ok(SebaSolution {
        perturbed,
        base: base_spec,
        poles,
        truncation_shift: shift,
        degenerate: base.degenerate,
    })
}

/// Perturbed spectrum on `(-∞, E_max]`.
pub fn seba_spectrum(spec: &SebaSpec, e_max: f64) -> Result<Spectrum> {
    Ok(seba_solve(spec, e_max)?.perturbed)
}

/// Per-point results of a location sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub point: (f64, f64),
    pub deviation: usize,
    pub gap_violations: usize,
    pub truncation_shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub max_deviation: usize,
    pub gap_violations: usize,
    pub max_truncation_shift: f64,
    pub points: Vec<SweepPoint>,
}

/// Runs [`seba_solve`] at every point of `points` and collects the largest
/// `sup |N - N₀|`.
pub fn location_sweep(template: &SebaSpec, points: &[(f64, f64)], e_max: f64) -> Result<SweepReport> {
    let mut report = SweepReport {
        max_deviation: 0,
        gap_violations: 0,
        max_truncation_shift: 0.0,
        points: Vec::with_capacity(points.len()),
    };
    for &p in points {
        let spec = template.with_point(p)?;
        let sol = seba_solve(&spec, e_max)?;
        let deviation = sol.deviation()?.sup_deviation as usize;
        let gaps = sol.gap_violations();
        report.max_deviation = report.max_deviation.max(deviation);
        report.gap_violations += gaps;
        report.max_truncation_shift = report.max_truncation_shift.max(sol.truncation_shift);
        report.points.push(SweepPoint {
            point: p,
            deviation,
            gap_violations: gaps,
            truncation_shift: sol.truncation_shift,
        });
    }
    Ok(report)
}
