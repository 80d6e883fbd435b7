//! Policy iteration for a lost-sales inventory-control MDP whose
//! policy-evaluation step can run on an exact LU solver, a simulated HHL
//! circuit, or a simulated variational linear solver.
//!
//! The crate also carries the Pauli-basis (LCU) decomposition used to load
//! the system matrix, a dense state-vector simulator with trajectory noise,
//! and closed-form QRAM feasibility estimates.

pub mod config;
pub mod error;
pub mod hhl;
pub mod lcu;
pub mod linalg;
pub mod mdp;
pub mod pauli;
pub mod policy_iteration;
pub mod qram;
pub mod qsim;
pub mod sparse;
pub mod vqls;

pub use error::{Error, Result};
