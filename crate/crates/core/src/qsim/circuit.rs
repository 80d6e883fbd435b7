use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign};

use rand::Rng;

use super::gate::{Gate, GateOp};
use super::noise::{sample_pauli_error, NoiseModel};
use super::state::StateVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            ops: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, op: GateOp) -> Result<&mut Self> {
        op.validate(self.n_qubits)?;
        self.ops.push(op);
        Ok(self)
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.n_qubits > self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                actual: other.n_qubits,
            });
        }
        self.ops.extend(other.ops.iter().cloned());
        Ok(self)
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            ops: self.ops.iter().rev().map(GateOp::inverse).collect(),
        }
    }

    /// Elementary gate counts after decomposing every operation.
    pub fn gate_counts(&self) -> GateCounts {
        self.ops.iter().map(decomposed_counts).fold(GateCounts::default(), Add::add)
    }

    /// One line per gate, e.g. `CZ 0 1` or `RY(0.5) 2`.
    pub fn dump(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in &self.ops {
            writeln!(f, "{op}")?;
        }
        Ok(())
    }
}

/// Applies `circuit` to a copy of `psi`. With a noise model a single Pauli
/// trajectory is sampled from `noise.seed`.
pub fn apply_circuit(psi: &StateVector, circuit: &Circuit, noise: Option<&NoiseModel>) -> Result<StateVector> {
    match noise {
        None => apply_noiseless(psi, circuit),
        Some(model) => apply_trajectory(psi, circuit, model, &mut model.trajectory_rng(0)),
    }
}

pub fn apply_noiseless(psi: &StateVector, circuit: &Circuit) -> Result<StateVector> {
    check_width(psi, circuit)?;
    let mut out = psi.clone();
    for op in circuit.ops() {
        out.apply_unchecked(op);
    }
    Ok(out)
}

/// One noisy trajectory drawn from `rng`.
pub fn apply_trajectory(
    psi: &StateVector,
    circuit: &Circuit,
    noise: &NoiseModel,
    rng: &mut impl Rng,
) -> Result<StateVector> {
    check_width(psi, circuit)?;
    let mut out = psi.clone();
    for op in circuit.ops() {
        out.apply_unchecked(op);
        let touched: Vec<usize> = op.qubits().collect();
        let p = noise.error_probability(touched.len());
        for q in touched {
            let gate = match sample_pauli_error(rng, p) {
                1 => Gate::X,
                2 => Gate::Y,
                3 => Gate::Z,
                _ => continue,
            };
            out.apply_unchecked(&GateOp::single(gate, q));
        }
    }
    Ok(out)
}

fn check_width(psi: &StateVector, circuit: &Circuit) -> Result<()> {
    if psi.n_qubits() != circuit.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: circuit.n_qubits(),
            actual: psi.n_qubits(),
        });
    }
    Ok(())
}

/// Single-qubit and CNOT counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct GateCounts {
    pub single: usize,
    pub cx: usize,
}

impl GateCounts {
    pub const fn new(single: usize, cx: usize) -> Self {
        Self { single, cx }
    }

    pub fn total(&self) -> usize {
        self.single + self.cx
    }

    pub fn to_map(&self) -> BTreeMap<String, usize> {
        BTreeMap::from([("cx".to_string(), self.cx), ("u".to_string(), self.single)])
    }

    fn times(self, k: usize) -> Self {
        Self::new(self.single * k, self.cx * k)
    }
}

impl Add for GateCounts {
    type Output = GateCounts;

    fn add(self, rhs: Self) -> Self {
        Self::new(self.single + rhs.single, self.cx + rhs.cx)
    }
}

impl AddAssign for GateCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

/// Shape of a single-qubit gate, which decides its controlled cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SingleKind {
    X,
    /// Z or Y: one CNOT with basis changes.
    PauliLike,
    /// Rotations and phases: two CNOTs.
    Rotation,
    General,
}

fn single_kind(gate: &Gate) -> SingleKind {
    match gate {
        Gate::X => SingleKind::X,
        Gate::Y | Gate::Z => SingleKind::PauliLike,
        Gate::Rx(_) | Gate::Ry(_) | Gate::Rz(_) | Gate::Phase(_) | Gate::S | Gate::T => SingleKind::Rotation,
        _ => SingleKind::General,
    }
}

/// Cost of a single-qubit gate with `k` controls.
///
/// One control uses the textbook forms (CX; basis-changed CX; two CX plus
/// rotations; the A-B-C decomposition). More controls recurse through
/// `C^k(U) = C(V) C^{k-1}(X) C(V^dagger) C^{k-1}(X) C^{k-1}(V)` with
/// `V^2 = U`.
fn controlled_single(kind: SingleKind, k: usize) -> GateCounts {
    match (kind, k) {
        (_, 0) => GateCounts::new(1, 0),
        (SingleKind::X, 1) => GateCounts::new(0, 1),
        (SingleKind::PauliLike, 1) => GateCounts::new(2, 1),
        (SingleKind::Rotation, 1) => GateCounts::new(3, 2),
        (SingleKind::General, 1) => GateCounts::new(4, 2),
        (SingleKind::X, 2) => GateCounts::new(9, 6),
        (_, k) => {
            controlled_single(SingleKind::General, 1).times(2)
                + controlled_single(SingleKind::X, k - 1).times(2)
                + controlled_single(SingleKind::General, k - 1)
        }
    }
}

/// Recursive quantum Shannon decomposition of an `n`-qubit unitary.
fn shannon(n: usize) -> GateCounts {
    if n <= 1 {
        return GateCounts::new(1, 0);
    }
    let mux = 3 * (1usize << (n - 1));
    shannon(n - 1).times(4) + GateCounts::new(mux, mux)
}

/// Elementary gates needed for one operation.
pub fn decomposed_counts(op: &GateOp) -> GateCounts {
    let k = op.controls.len();
    match &op.gate {
        Gate::Cx => controlled_single(SingleKind::X, k + 1),
        Gate::Cz => controlled_single(SingleKind::PauliLike, k + 1),
        Gate::Swap => controlled_single(SingleKind::X, k + 1).times(3),
        Gate::Pauli(p) => p
            .ops()
            .iter()
            .filter(|&&o| o != crate::pauli::Pauli::I)
            .map(|&o| {
                let kind = if o == crate::pauli::Pauli::X {
                    SingleKind::X
                } else {
                    SingleKind::PauliLike
                };
                if k == 0 {
                    GateCounts::new(1, 0)
                } else {
                    controlled_single(kind, k)
                }
            })
            .fold(GateCounts::default(), Add::add),
        Gate::Unitary(m) => {
            let width = m.nrows().trailing_zeros() as usize;
            if width == 1 {
                controlled_single(SingleKind::General, k)
            } else {
                shannon(width + k)
            }
        }
        gate => controlled_single(single_kind(gate), k),
    }
}
