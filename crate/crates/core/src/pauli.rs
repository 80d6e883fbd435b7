//! Pauli operators and tensor-product strings.
//!
//! `ops[q]` acts on qubit `q`, and qubit 0 is the least-significant bit of a
//! basis-state index. Labels are written most-significant qubit first, so the
//! label `XZI` is the Kronecker product `X ⊗ Z ⊗ I` with `I` on qubit 0.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    ops: Vec<Pauli>,
}

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::param("pauli_string", "needs at least one qubit"));
        }
        if ops.len() > usize::BITS as usize / 2 {
            return Err(Error::param("pauli_string", "too many qubits"));
        }
        Ok(Self { ops })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            ops: vec![Pauli::I; n_qubits],
        }
    }

    /// The `index`-th string in base-4 order, digit `q` selecting the operator
    /// on qubit `q`. Enumerating `0..4^n` visits every string once.
    pub fn from_index(n_qubits: usize, index: usize) -> Self {
        let ops = (0..n_qubits)
            .map(|q| Pauli::ALL[(index >> (2 * q)) & 3])
            .collect();
        Self { ops }
    }

    pub fn n_qubits(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn op(&self, qubit: usize) -> Pauli {
        self.ops[qubit]
    }

    pub fn weight(&self) -> usize {
        self.ops.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// Bit mask of qubits flipped by the string (X or Y).
    pub fn x_mask(&self) -> usize {
        self.mask(|p| matches!(p, Pauli::X | Pauli::Y))
    }

    /// Bit mask of qubits picking up a sign (Z or Y).
    pub fn z_mask(&self) -> usize {
        self.mask(|p| matches!(p, Pauli::Z | Pauli::Y))
    }

    fn mask(&self, pred: impl Fn(Pauli) -> bool) -> usize {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, &p)| pred(p))
            .fold(0, |m, (q, _)| m | (1 << q))
    }

    fn y_count(&self) -> usize {
        self.ops.iter().filter(|&&p| p == Pauli::Y).count()
    }

    /// `P|j> = phase(j) |j ^ x_mask>`.
    pub fn phase(&self, basis: usize) -> Complex64 {
        let base = match self.y_count() % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        if (basis & self.z_mask()).count_ones() % 2 == 1 {
            -base
        } else {
            base
        }
    }

    /// Writes `P amplitudes` into `out`.
    pub fn apply_into(&self, amplitudes: &[Complex64], out: &mut [Complex64]) {
        let x = self.x_mask();
        let z = self.z_mask();
        let base = self.phase(0);
        for (j, &a) in amplitudes.iter().enumerate() {
            let sign = if (j & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[j ^ x] = base * sign * a;
        }
    }

    pub fn apply(&self, amplitudes: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); amplitudes.len()];
        self.apply_into(amplitudes, &mut out);
        out
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits();
        let x = self.x_mask();
        let mut m = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            m[(j ^ x, j)] = self.phase(j);
        }
        m
    }

    pub fn label(&self) -> String {
        self.ops.iter().rev().map(|p| p.symbol()).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s
            .chars()
            .rev()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::param("pauli_string", format!("unknown operator `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ops)
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic on the label with `I < X < Y < Z`.
impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ops
            .len()
            .cmp(&other.ops.len())
            .then_with(|| self.ops.iter().rev().cmp(other.ops.iter().rev()))
    }
}
