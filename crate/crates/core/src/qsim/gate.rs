use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::unitarity_deviation;
use crate::pauli::{Pauli, PauliString};

const UNITARY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H,
    X,
    Y,
    Z,
    S,
    T,
    Rx(f64),
    Ry(f64),
    Rz(f64),
    /// `diag(1, e^{i phi})`.
    Phase(f64),
    /// Targets `[control, target]`.
    Cx,
    Cz,
    Swap,
    /// Dense unitary; `targets[b]` is bit `b` of the matrix index.
    Unitary(Arc<DMatrix<Complex64>>),
    /// `ops[q]` acts on `targets[q]`.
    Pauli(PauliString),
}

impl Gate {
    pub fn arity(&self) -> usize {
        match self {
            Gate::Cx | Gate::Cz | Gate::Swap => 2,
            Gate::Unitary(m) => m.nrows().trailing_zeros() as usize,
            Gate::Pauli(p) => p.n_qubits(),
            _ => 1,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Gate::H => "H".into(),
            Gate::X => "X".into(),
            Gate::Y => "Y".into(),
            Gate::Z => "Z".into(),
            Gate::S => "S".into(),
            Gate::T => "T".into(),
            Gate::Rx(t) => format!("RX({t})"),
            Gate::Ry(t) => format!("RY({t})"),
            Gate::Rz(t) => format!("RZ({t})"),
            Gate::Phase(t) => format!("P({t})"),
            Gate::Cx => "CX".into(),
            Gate::Cz => "CZ".into(),
            Gate::Swap => "SWAP".into(),
            Gate::Unitary(m) => format!("U({}x{})", m.nrows(), m.ncols()),
            Gate::Pauli(p) => format!("PAULI({p})"),
        }
    }

    /// Dense matrix in the gate's own target ordering. Pauli strings are
    /// applied directly and never densified here.
    pub fn matrix(&self) -> Option<DMatrix<Complex64>> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let m2 = |a, b, cc, d| Some(DMatrix::from_row_slice(2, 2, &[a, b, cc, d]));
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Gate::H => m2(c(s2, 0.), c(s2, 0.), c(s2, 0.), c(-s2, 0.)),
            Gate::X => m2(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)),
            Gate::Y => m2(c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)),
            Gate::Z => m2(c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)),
            Gate::S => m2(c(1., 0.), c(0., 0.), c(0., 0.), c(0., 1.)),
            Gate::T => m2(c(1., 0.), c(0., 0.), c(0., 0.), Complex64::from_polar(1.0, FRAC_PI_4)),
            Gate::Rx(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                m2(c(co, 0.), c(0., -s), c(0., -s), c(co, 0.))
            }
            Gate::Ry(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                m2(c(co, 0.), c(-s, 0.), c(s, 0.), c(co, 0.))
            }
            Gate::Rz(t) => m2(
                Complex64::from_polar(1.0, -t / 2.0),
                c(0., 0.),
                c(0., 0.),
                Complex64::from_polar(1.0, t / 2.0),
            ),
            Gate::Phase(t) => m2(c(1., 0.), c(0., 0.), c(0., 0.), Complex64::from_polar(1.0, *t)),
            Gate::Cx => Some(permutation4([0, 3, 2, 1])),
            Gate::Cz => {
                let mut m = DMatrix::identity(4, 4);
                m[(3, 3)] = c(-1., 0.);
                Some(m)
            }
            Gate::Swap => Some(permutation4([0, 2, 1, 3])),
            Gate::Unitary(m) => Some((**m).clone()),
            Gate::Pauli(_) => None,
        }
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::S => Gate::Phase(-std::f64::consts::FRAC_PI_2),
            Gate::T => Gate::Phase(-FRAC_PI_4),
            Gate::Rx(t) => Gate::Rx(-t),
            Gate::Ry(t) => Gate::Ry(-t),
            Gate::Rz(t) => Gate::Rz(-t),
            Gate::Phase(t) => Gate::Phase(-t),
            Gate::Unitary(m) => Gate::Unitary(Arc::new(m.adjoint())),
            other => other.clone(),
        }
    }

    pub fn is_single_qubit_pauli(&self) -> Option<Pauli> {
        match self {
            Gate::X => Some(Pauli::X),
            Gate::Y => Some(Pauli::Y),
            Gate::Z => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Column `k` of the result has its one at row `perm[k]`.
fn permutation4(perm: [usize; 4]) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(4, 4);
    for (col, &row) in perm.iter().enumerate() {
        m[(row, col)] = Complex64::new(1.0, 0.0);
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    pub gate: Gate,
    pub targets: Vec<usize>,
    pub controls: Vec<usize>,
}

impl GateOp {
    pub fn new(gate: Gate, targets: Vec<usize>) -> Self {
        Self {
            gate,
            targets,
            controls: Vec::new(),
        }
    }

    pub fn single(gate: Gate, target: usize) -> Self {
        Self::new(gate, vec![target])
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::new(Gate::Cx, vec![control, target])
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self::new(Gate::Cz, vec![a, b])
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self::new(Gate::Swap, vec![a, b])
    }

    pub fn unitary(matrix: DMatrix<Complex64>, targets: Vec<usize>) -> Self {
        Self::new(Gate::Unitary(Arc::new(matrix)), targets)
    }

    pub fn pauli(p: PauliString, targets: Vec<usize>) -> Self {
        Self::new(Gate::Pauli(p), targets)
    }

    pub fn controlled(mut self, controls: impl IntoIterator<Item = usize>) -> Self {
        self.controls.extend(controls);
        self
    }

    pub fn inverse(&self) -> Self {
        Self {
            gate: self.gate.inverse(),
            targets: self.targets.clone(),
            controls: self.controls.clone(),
        }
    }

    /// Every qubit the operation acts on.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().chain(&self.controls).copied()
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.targets.len() != self.gate.arity() {
            return Err(Error::GateArity {
                gate: self.gate.name(),
                expected: self.gate.arity(),
                actual: self.targets.len(),
            });
        }
        let mut seen = 0u64;
        for q in self.qubits() {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
            if seen & (1 << q) != 0 {
                return Err(Error::OverlappingQubits(q));
            }
            seen |= 1 << q;
        }
        if let Gate::Unitary(m) = &self.gate {
            if m.nrows() != m.ncols() || !m.nrows().is_power_of_two() {
                return Err(Error::NotPowerOfTwo(m.nrows()));
            }
            let deviation = unitarity_deviation(m);
            if deviation > UNITARY_TOLERANCE {
                return Err(Error::NotUnitary(deviation));
            }
        }
        Ok(())
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.controls.is_empty() {
            let controls: Vec<String> = self.controls.iter().map(usize::to_string).collect();
            write!(f, "C({}) ", controls.join(","))?;
        }
        f.write_str(&self.gate.name())?;
        for t in &self.targets {
            write!(f, " {t}")?;
        }
        Ok(())
    }
}
