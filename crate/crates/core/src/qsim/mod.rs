//! Dense state-vector simulation.
//!
//! Qubit 0 is the least-significant bit of an amplitude index. Noise is
//! simulated by sampling Pauli trajectories rather than density matrices.

mod circuit;
mod gate;
mod noise;
mod state;
pub mod library;

pub use circuit::{apply_circuit, apply_noiseless, apply_trajectory, decomposed_counts, Circuit, GateCounts};
pub use gate::{Gate, GateOp};
pub use noise::NoiseModel;
pub use state::{expectation_pauli, fidelity, sample_measurement, StateVector};

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 16;
