//! Spectra and counting functions of self-adjoint extensions of symmetric
//! operators with finite deficiency indices.
//!
//! Two families are covered:
//!
//! * quantum graphs: `-d²/dx²` on a finite collection of intervals, with a
//!   self-adjoint coupling of the endpoint values encoded by a unitary
//!   matrix ([`graph`], [`secular`], [`solver`]);
//! * the Dirichlet rectangle with one point (delta) perturbation ([`seba`]).
//!
//! [`comparison`] evaluates the counting-function bounds on computed spectra
//! and [`oracle`] holds the independent engines used to cross-check them.

pub mod comparison;
pub mod error;
pub mod flow;
pub mod graph;
pub mod oracle;
pub mod rng;
pub mod seba;
pub mod secular;
pub mod solver;
pub mod spectrum;

mod optimize;

pub use error::{Error, Result};
pub use graph::{CombinatorialGraph, ExtensionUnitary, GraphSpec};
pub use spectrum::{CountingFunction, Eigenvalue, Spectrum, Window};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
