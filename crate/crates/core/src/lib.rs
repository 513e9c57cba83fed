//! Exact and variational ground states of the quantum Rabi model
//! `H = omega a^dagger a + lambda (a + a^dagger) sigma_x + (omega0/2) sigma_z`,
//! with stationarity (balance) identities, ground-state inequalities and
//! Wigner-origin bounds evaluated as numeric residuals.

pub mod balance;
pub mod cli;
pub mod error;
pub mod fock;
pub mod model;
pub mod solver;
pub mod sweep;
pub mod variational;

pub use error::{Error, Result};
pub use model::{ModelParams, ParitySector};
pub use solver::{solve_rabi_ground, GroundSolution, SolveOptions};
pub use variational::{minimize_energy, TrialParams, VariationalResult};
