//! Gross–Pitaevskii, Hartree and N-body variational problems and the rate
//! functions built on them.

mod canonical;
mod gp;
mod hamiltonian;
mod hartree;
mod rates;

pub use canonical::{canonical_ground, canonical_potential, canonical_rayleigh, CanonicalGroundState, CanonicalOptions};
pub use gp::{gp_energy, gp_minimize, gp_minimize_from, GpOptions, GpResult};
pub use hamiltonian::{GridHamiltonian, Negated};
pub use hartree::{
    el_residual, hartree_cap_ladder, hartree_minimize, minimize_from, product_energy, recompute_lambda,
    tilt_derivative_check, CapLadderReport, Coupling, HartreeOptions, ProductState, TiltReport,
};
pub use rates::{rate_canonical, rate_dirac, rate_hartree, rate_mean_given_decomposition, Measure, RateReport};
