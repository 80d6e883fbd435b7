//! Composite circuits built from the elementary gate set.

use std::f64::consts::{FRAC_PI_2, PI};

use super::gate::{Gate, GateOp};
use crate::pauli::{Pauli, PauliString};

/// Quantum Fourier transform on `qubits` (`qubits[0]` is the register's
/// least-significant bit): `|x> -> 2^{-n/2} sum_y e^{2 pi i x y / 2^n} |y>`.
pub fn qft(qubits: &[usize]) -> Vec<GateOp> {
    let n = qubits.len();
    let mut ops = Vec::new();
    for j in (0..n).rev() {
        ops.push(GateOp::single(Gate::H, qubits[j]));
        for k in (0..j).rev() {
            let angle = PI / (1u64 << (j - k)) as f64;
            ops.push(GateOp::single(Gate::Phase(angle), qubits[j]).controlled([qubits[k]]));
        }
    }
    for i in 0..n / 2 {
        ops.push(GateOp::swap(qubits[i], qubits[n - 1 - i]));
    }
    ops
}

pub fn inverse_qft(qubits: &[usize]) -> Vec<GateOp> {
    qft(qubits).iter().rev().map(GateOp::inverse).collect()
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Uniformly controlled `Ry`: for control value `m` (bit `b` of `m` read from
/// `controls[b]`) the target receives `Ry(angles[m])`. Uses `2^k` rotations
/// and `2^k` CNOTs in Gray-code order.
pub fn uniformly_controlled_ry(target: usize, controls: &[usize], angles: &[f64]) -> Vec<GateOp> {
    let k = controls.len();
    let m_count = 1usize << k;
    assert_eq!(angles.len(), m_count, "one angle per control value");
    if k == 0 {
        return vec![GateOp::single(Gate::Ry(angles[0]), target)];
    }
    let thetas: Vec<f64> = (0..m_count)
        .map(|i| {
            let g = gray(i);
            angles
                .iter()
                .enumerate()
                .map(|(m, &a)| if (m & g).count_ones() % 2 == 1 { -a } else { a })
                .sum::<f64>()
                / m_count as f64
        })
        .collect();
    let mut ops = Vec::with_capacity(2 * m_count);
    for (i, &theta) in thetas.iter().enumerate() {
        ops.push(GateOp::single(Gate::Ry(theta), target));
        let changed = gray(i) ^ gray((i + 1) % m_count);
        ops.push(GateOp::cx(controls[changed.trailing_zeros() as usize], target));
    }
    ops
}

/// Prepares the normalized real vector `values` from `|0...0>` on `qubits`
/// with a cascade of uniformly controlled `Ry` rotations.
pub fn real_state_preparation(values: &[f64], qubits: &[usize]) -> Vec<GateOp> {
    let n = qubits.len();
    assert_eq!(values.len(), 1 << n, "one amplitude per basis state");
    let block_norm = |range: std::ops::Range<usize>| values[range].iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut ops = Vec::new();
    for level in (0..n).rev() {
        let half = 1usize << level;
        let angles: Vec<f64> = (0..1usize << (n - 1 - level))
            .map(|prefix| {
                let start = prefix * 2 * half;
                let (a, b) = if level == 0 {
                    (values[start], values[start + 1])
                } else {
                    (block_norm(start..start + half), block_norm(start + half..start + 2 * half))
                };
                2.0 * b.atan2(a)
            })
            .collect();
        ops.extend(uniformly_controlled_ry(qubits[level], &qubits[level + 1..], &angles));
    }
    ops
}

/// `exp(i theta P)` controlled on `control`, with `P.op(q)` acting on
/// `targets[q]`: basis changes, a CNOT parity ladder and one controlled `Rz`.
pub fn controlled_pauli_exponential(p: &PauliString, theta: f64, control: usize, targets: &[usize]) -> Vec<GateOp> {
    let support: Vec<(usize, Pauli)> = p
        .ops()
        .iter()
        .enumerate()
        .filter(|(_, &o)| o != Pauli::I)
        .map(|(q, &o)| (targets[q], o))
        .collect();
    if support.is_empty() {
        return vec![GateOp::single(Gate::Phase(theta), control)];
    }
    let mut basis = Vec::new();
    for &(q, o) in &support {
        match o {
            Pauli::X => basis.push(GateOp::single(Gate::H, q)),
            Pauli::Y => basis.push(GateOp::single(Gate::Rx(FRAC_PI_2), q)),
            _ => {}
        }
    }
    let ladder: Vec<GateOp> = support.windows(2).map(|w| GateOp::cx(w[0].0, w[1].0)).collect();
    let last = support.last().expect("non-empty support").0;

    let mut ops = basis.clone();
    ops.extend(ladder.iter().cloned());
    ops.push(GateOp::single(Gate::Rz(-2.0 * theta), last).controlled([control]));
    ops.extend(ladder.iter().rev().cloned());
    ops.extend(basis.iter().map(GateOp::inverse));
    ops
}
