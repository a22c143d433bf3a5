//! Numerical laboratory for Bose gases in a trap: Gross–Pitaevskii and
//! Hartree minimization, N-body ground states, scattering lengths, and
//! Monte Carlo path and walk ensembles.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod experiments;
pub mod fields;
pub mod grid;
pub mod linalg;
pub mod montecarlo;
pub mod potentials;
pub mod quadrature;
pub mod scattering;
pub mod variational;

pub use error::{Error, Result};
pub use fields::{DensityField, InteractionKernel, ScalarField};
pub use grid::{Boundary, Grid};
pub use potentials::{PairPotential, TrapPotential};
