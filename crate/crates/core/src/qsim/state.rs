use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gate::{Gate, GateOp};
use super::MAX_QUBITS;
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};

/// Dense amplitude vector; qubit 0 is the least-significant index bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

fn check_qubits(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::param("n_qubits", "must be at least 1"));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits(n_qubits, MAX_QUBITS));
    }
    Ok(())
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: index + 1,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    /// Normalizes `amplitudes`; the length must be a power of two.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(dim));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self {
            n_qubits,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Tensor product `self ⊗ low`: `low` occupies the low qubits.
    pub fn tensor(&self, low: &StateVector) -> Result<StateVector> {
        check_qubits(self.n_qubits + low.n_qubits)?;
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|h| low.amplitudes.iter().map(move |l| h * l))
            .collect();
        Ok(StateVector {
            n_qubits: self.n_qubits + low.n_qubits,
            amplitudes,
        })
    }

    /// Applies one validated operation in place.
    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        op.validate(self.n_qubits)?;
        self.apply_unchecked(op);
        Ok(())
    }

    pub(crate) fn apply_unchecked(&mut self, op: &GateOp) {
        let control_mask = op.controls.iter().fold(0usize, |m, &c| m | (1 << c));
        match &op.gate {
            Gate::Pauli(p) => self.apply_pauli_on(p, &op.targets, control_mask),
            gate => {
                let m = gate.matrix().expect("non-Pauli gates have matrices");
                apply_matrix(&mut self.amplitudes, m.as_slice(), &op.targets, control_mask);
            }
        }
    }

    fn apply_pauli_on(&mut self, p: &PauliString, targets: &[usize], control_mask: usize) {
        let mut x = 0usize;
        let mut z = 0usize;
        let mut ys = 0usize;
        for (q, &t) in targets.iter().enumerate() {
            match p.op(q) {
                Pauli::I => {}
                Pauli::X => x |= 1 << t,
                Pauli::Z => z |= 1 << t,
                Pauli::Y => {
                    x |= 1 << t;
                    z |= 1 << t;
                    ys += 1;
                }
            }
        }
        let base = Complex64::new(0.0, 1.0).powu(ys as u32);
        let old = self.amplitudes.clone();
        for (j, a) in old.into_iter().enumerate() {
            if j & control_mask != control_mask {
                continue;
            }
            let sign = if (j & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            self.amplitudes[j ^ x] = base * sign * a;
        }
    }

    /// Applies a full-width Pauli string to a copy of the state.
    pub fn pauli_applied(&self, p: &PauliString) -> Vec<Complex64> {
        p.apply(&self.amplitudes)
    }
}

/// Gathers the `2^k` amplitudes addressed by `targets` for every basis state
/// with all controls set, multiplies by the row-major-in-column-storage
/// `matrix` and scatters them back.
fn apply_matrix(amps: &mut [Complex64], matrix: &[Complex64], targets: &[usize], control_mask: usize) {
    let k = targets.len();
    let dim = 1usize << k;
    let target_mask = targets.iter().fold(0usize, |m, &t| m | (1 << t));
    let offsets: Vec<usize> = (0..dim)
        .map(|m| {
            targets
                .iter()
                .enumerate()
                .fold(0, |acc, (b, &t)| acc | (((m >> b) & 1) << t))
        })
        .collect();
    let mut gathered = vec![Complex64::new(0.0, 0.0); dim];
    for base in 0..amps.len() {
        if base & target_mask != 0 || base & control_mask != control_mask {
            continue;
        }
        for (g, &off) in gathered.iter_mut().zip(&offsets) {
            *g = amps[base | off];
        }
        for (row, &off) in offsets.iter().enumerate() {
            // nalgebra stores column-major: element (row, col) at col * dim + row.
            amps[base | off] = (0..dim).map(|col| matrix[col * dim + row] * gathered[col]).sum();
        }
    }
}

/// `<psi|P|psi>` for a Pauli string spanning every qubit.
pub fn expectation_pauli(psi: &StateVector, p: &PauliString) -> Result<f64> {
    if p.n_qubits() != psi.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: psi.n_qubits(),
            actual: p.n_qubits(),
        });
    }
    let applied = psi.pauli_applied(p);
    let value: Complex64 = psi
        .amplitudes()
        .iter()
        .zip(&applied)
        .map(|(a, b)| a.conj() * b)
        .sum();
    debug_assert!(value.im.abs() < 1e-10);
    Ok(value.re)
}

/// `|<psi|phi>|^2`.
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    if psi.n_qubits() != phi.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: psi.n_qubits(),
            actual: phi.n_qubits(),
        });
    }
    Ok(psi.inner(phi).norm_sqr().min(1.0))
}

/// Samples computational-basis outcomes of `qubits`. Keys list `qubits[0]`
/// as the rightmost character.
pub fn sample_measurement(
    psi: &StateVector,
    qubits: &[usize],
    shots: usize,
    seed: u64,
) -> Result<BTreeMap<String, usize>> {
    if shots == 0 {
        return Err(Error::param("shots", "must be at least 1"));
    }
    for &q in qubits {
        if q >= psi.n_qubits() {
            return Err(Error::QubitOutOfRange {
                index: q,
                n_qubits: psi.n_qubits(),
            });
        }
    }
    let mut cumulative = Vec::with_capacity(psi.dim());
    let mut total = 0.0;
    for p in psi.probabilities() {
        total += p;
        cumulative.push(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * total;
        let index = cumulative.partition_point(|&c| c <= u).min(psi.dim() - 1);
        let key: String = qubits
            .iter()
            .rev()
            .map(|&q| if (index >> q) & 1 == 1 { '1' } else { '0' })
            .collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    Ok(counts)
}
