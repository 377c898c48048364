//! Independent engines used to cross-check the solver and the comparison
//! bounds: a finite-difference discretization of graphs with classical
//! vertex conditions, and random finite-dimensional models of two operators
//! whose quadratic forms agree on a subspace of codimension `d`.

pub mod fd;
pub mod minmax;
