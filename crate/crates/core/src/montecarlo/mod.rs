//! Path-space Monte Carlo: Brownian path ensembles, lattice walks, the Dirac
//! walk model, thermodynamic integration and the exact lattice oracle.

pub mod brownian;
pub mod chain3;
pub mod dirac;
pub mod fk;
pub mod lattice;
pub mod rng;
pub mod stats;
pub mod thermo;
pub mod walk;

#[cfg(test)]
mod tests;

pub use brownian::{
    hamiltonian_g, hamiltonian_h, hamiltonian_k, occupation, path_masses, OccupationHistogram, PathEnsemble,
    PathModel, PathMove, PathSampler, PathState, StartBall,
};
pub use chain3::TinyPathChain;
pub use dirac::{
    ctrw_simulate, dirac_weight, intersection_alpha, local_times, mean_rescaled_density, rescaled_l, trap_integral,
    DiracSampler, DiracState, LocalTimes, RescaledLocalTime, WalkMove, WalkTrajectory,
};
pub use fk::{fk_oracle, FkResult};
pub use lattice::{LatticeModel, LatticeMove, LatticeState};
pub use rng::{stream, Stream};
pub use thermo::{run_chains, thermo_log_z, ChainOptions, ChainRun, LadderNode, Sampler, ThermoOptions, ThermoResult};
