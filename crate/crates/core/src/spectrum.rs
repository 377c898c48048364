//! Discrete spectra and their counting functions.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub value: f64,
    pub multiplicity: usize,
}

/// Energy range `(lo, hi]` on which a spectrum is known to be complete.
///
/// When `floor_certified` is set there are no eigenvalues `≤ lo` at all, so
/// the spectrum is complete on `(-∞, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    pub floor_certified: bool,
}

impl Window {
    pub fn contains(&self, energy: f64) -> bool {
        energy <= self.hi && (self.floor_certified || energy > self.lo)
    }
}

/// Sorted eigenvalues with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    entries: Vec<Eigenvalue>,
    window: Window,
}

impl Spectrum {
    /// Builds a spectrum from entries in any order. Entries must be strictly
    /// separated, have positive multiplicity and lie in the window.
    pub fn new(mut entries: Vec<Eigenvalue>, window: Window) -> Result<Self> {
        entries.sort_by(|a, b| a.value.total_cmp(&b.value));
        for pair in entries.windows(2) {
            if pair[0].value >= pair[1].value {
                return Err(Error::InvalidArgument(format!(
                    "eigenvalue {} listed twice",
                    pair[0].value
                )));
            }
        }
        if let Some(bad) = entries.iter().find(|e| e.multiplicity == 0) {
            return Err(Error::InvalidArgument(format!(
                "eigenvalue {} has multiplicity 0",
                bad.value
            )));
        }
        if let Some(bad) = entries
            .iter()
            .find(|e| !(e.value > window.lo && e.value <= window.hi))
        {
            return Err(Error::InvalidArgument(format!(
                "eigenvalue {} outside window ({}, {}]",
                bad.value, window.lo, window.hi
            )));
        }
        Ok(Self { entries, window })
    }

    pub fn entries(&self) -> &[Eigenvalue] {
        &self.entries
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total multiplicity.
    pub fn total_multiplicity(&self) -> usize {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    /// Total multiplicity of strictly negative eigenvalues.
    pub fn negative_multiplicity(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.value < 0.0)
            .map(|e| e.multiplicity)
            .sum()
    }

    /// Eigenvalues repeated by multiplicity, in nondecreasing order.
    pub fn expanded(&self) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.value, e.multiplicity))
            .collect()
    }

    /// `N(E)`: total multiplicity of eigenvalues `≤ E`.
    pub fn counting(&self, energy: f64) -> Result<usize> {
        if !self.window.contains(energy) {
            return Err(Error::OutOfWindow {
                energy,
                lo: self.window.lo,
                hi: self.window.hi,
            });
        }
        let idx = self.entries.partition_point(|e| e.value <= energy);
        Ok(self.entries[..idx].iter().map(|e| e.multiplicity).sum())
    }

    /// Concatenates two spectra on adjacent windows (`self` below `upper`).
    pub fn concat(&self, upper: &Spectrum) -> Result<Spectrum> {
        if (self.window.hi - upper.window.lo).abs() > 0.0 {
            return Err(Error::WindowMismatch(format!(
                "windows ({}, {}] and ({}, {}] are not adjacent",
                self.window.lo, self.window.hi, upper.window.lo, upper.window.hi
            )));
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&upper.entries);
        Spectrum::new(
            entries,
            Window {
                lo: self.window.lo,
                hi: upper.window.hi,
                floor_certified: self.window.floor_certified,
            },
        )
    }

    pub fn counting_function(&self) -> CountingFunction<'_> {
        CountingFunction { spectrum: self }
    }
}

/// Step-function view `E ↦ N(E)` of a spectrum.
#[derive(Debug, Clone, Copy)]
pub struct CountingFunction<'a> {
    spectrum: &'a Spectrum,
}

impl CountingFunction<'_> {
    pub fn eval(&self, energy: f64) -> Result<usize> {
        self.spectrum.counting(energy)
    }

    /// Energies at which `N` jumps.
    pub fn jumps(&self) -> impl Iterator<Item = f64> + '_ {
        self.spectrum.entries.iter().map(|e| e.value)
    }
}

/// `counting(s, E)`.
pub fn counting(s: &Spectrum, energy: f64) -> Result<usize> {
    s.counting(energy)
}
