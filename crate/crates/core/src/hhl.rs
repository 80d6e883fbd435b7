//! Simulated HHL for the Hermitian-embedded policy-evaluation system.
//!
//! Register layout: data qubits `0..N`, clock qubits `N..N + n_clock`, then
//! one ancilla. Phase estimation runs over exact `exp(i H t 2^k)` powers and
//! reads the clock in two's complement, so the `+-sigma` spectrum of a
//! block embedding inverts with the right sign.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lcu::{hermitian_embed, pauli_coefficients, EmbeddedSystem, LcuDecomposition};
use crate::linalg::{hermitian_eigen, hermitian_exp_i, max_abs, norm2};
use crate::mdp::{bellman_system_matrix, build_inventory_mdp, DemandDistribution, InventoryParams, Policy};
use crate::qsim::library::{controlled_pauli_exponential, inverse_qft, real_state_preparation, uniformly_controlled_ry};
use crate::qsim::{apply_noiseless, sample_measurement, Circuit, Gate, GateCounts, GateOp, StateVector, MAX_QUBITS};
use crate::sparse::SparseMatrix;

/// Below this ancilla-`|1>` probability the output is treated as lost.
pub const STARVATION_THRESHOLD: f64 = 1e-6;

/// Largest data register accepted by [`hhl_solve`] and the gate-count grid.
pub const MAX_DATA_QUBITS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HhlConfig {
    pub n_clock: usize,
    /// Defaults to placing `lambda_max` on the largest positive clock value.
    pub evolution_time: Option<f64>,
    /// Defaults to the smallest eigenvalue magnitude.
    pub rotation_constant: Option<f64>,
    /// When non-zero, the ancilla is also sampled this many times.
    pub shots: usize,
    /// When false a starved ancilla branch is returned instead of an error.
    pub post_select: bool,
    pub seed: u64,
}

impl Default for HhlConfig {
    fn default() -> Self {
        Self {
            n_clock: 6,
            evolution_time: None,
            rotation_constant: None,
            shots: 0,
            post_select: true,
            seed: 0,
        }
    }
}

impl HhlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_clock < 2 {
            return Err(Error::param(
                "n_clock",
                "a signed clock needs at least 2 qubits",
            ));
        }
        if let Some(t) = self.evolution_time {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::param("evolution_time", format!("must be positive, got {t}")));
            }
        }
        if let Some(c) = self.rotation_constant {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::param("rotation_constant", format!("must be positive, got {c}")));
            }
        }
        Ok(())
    }

    /// `t` putting `lambda_max` on clock value `2^{n-1} - 1`, the largest
    /// positive two's-complement value.
    pub fn default_time(n_clock: usize, lambda_max: f64) -> f64 {
        let m = (1u64 << n_clock) as f64;
        2.0 * PI * (m / 2.0 - 1.0) / (m * lambda_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HhlReport {
    #[serde(rename = "success_prob")]
    pub success_probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampled_success_probability: Option<f64>,
    #[serde(rename = "fidelity")]
    pub solution_fidelity: f64,
    pub residual: f64,
    #[serde(rename = "counts")]
    pub gate_counts: BTreeMap<String, usize>,
    pub n_qubits_total: usize,
    pub evolution_time: f64,
    pub rotation_constant: f64,
    /// Some eigenvalue falls outside the clock window.
    pub aliasing: bool,
}

impl HhlReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::to_value(self).expect("report serializes"))
            .expect("value serializes")
    }
}

/// `|r> = r / ||r||`, loaded exactly.
pub fn prepare_rhs_state(r: &[f64]) -> Result<StateVector> {
    StateVector::from_real(r)
}

pub fn evolution_unitary(sys: &EmbeddedSystem, t: f64) -> DMatrix<Complex64> {
    hermitian_exp_i(&sys.h, t)
}

/// Two's-complement reading of clock value `m`.
fn signed_clock(m: usize, n_clock: usize) -> i64 {
    let half = 1usize << (n_clock - 1);
    if m < half {
        m as i64
    } else {
        m as i64 - (1i64 << n_clock)
    }
}

/// Eigenvalue estimate encoded by clock value `m`.
pub fn clock_eigenvalue(m: usize, n_clock: usize, t: f64) -> f64 {
    2.0 * PI * signed_clock(m, n_clock) as f64 / (t * (1u64 << n_clock) as f64)
}

/// Ancilla angles `2 asin(C / lambda_m)`, zero on the `lambda = 0` reading.
fn rotation_angles(n_clock: usize, t: f64, c: f64) -> Vec<f64> {
    (0..1usize << n_clock)
        .map(|m| {
            let lambda = clock_eigenvalue(m, n_clock, t);
            if lambda == 0.0 {
                0.0
            } else {
                2.0 * (c / lambda).clamp(-1.0, 1.0).asin()
            }
        })
        .collect()
}

fn aliases(eigenvalues: &[f64], n_clock: usize, t: f64) -> bool {
    let m = (1u64 << n_clock) as f64;
    eigenvalues.iter().any(|&l| {
        let x = l * t * m / (2.0 * PI);
        x > m / 2.0 - 0.5 || x < -m / 2.0 - 0.5
    })
}

struct Registers {
    data: Vec<usize>,
    clock: Vec<usize>,
    ancilla: usize,
}

impl Registers {
    fn new(n_data: usize, n_clock: usize) -> Self {
        Self {
            data: (0..n_data).collect(),
            clock: (n_data..n_data + n_clock).collect(),
            ancilla: n_data + n_clock,
        }
    }

    fn total(&self) -> usize {
        self.ancilla + 1
    }
}

/// Phase estimation, eigenvalue rotation, and the mirrored uncompute.
/// `powers[k]` holds the operations for `U^{2^k}` controlled on clock `k`.
fn hhl_circuit(reg: &Registers, powers: Vec<Vec<GateOp>>, angles: &[f64]) -> Result<Circuit> {
    let mut estimate = Circuit::new(reg.total());
    for &q in &reg.clock {
        estimate.push(GateOp::single(Gate::H, q))?;
    }
    for ops in powers {
        for op in ops {
            estimate.push(op)?;
        }
    }
    for op in inverse_qft(&reg.clock) {
        estimate.push(op)?;
    }
    let mut full = estimate.clone();
    for op in uniformly_controlled_ry(reg.ancilla, &reg.clock, angles) {
        full.push(op)?;
    }
    full.extend(&estimate.inverse())?;
    Ok(full)
}

/// Solves `H x = rhs` for an embedded system and returns the solution block
/// (the Q-vector for a block embedding) with its norm restored as
/// `||r|| sqrt(p) / C`.
pub fn hhl_solve(sys: &EmbeddedSystem, cfg: &HhlConfig) -> Result<(Vec<f64>, HhlReport)> {
    cfg.validate()?;
    let n_data = sys.n_qubits;
    if n_data > MAX_DATA_QUBITS {
        return Err(Error::TooManyQubits(n_data, MAX_DATA_QUBITS));
    }
    let reg = Registers::new(n_data, cfg.n_clock);
    if reg.total() > MAX_QUBITS {
        return Err(Error::TooManyQubits(reg.total(), MAX_QUBITS));
    }
    let rhs_norm = norm2(&sys.rhs);
    if rhs_norm == 0.0 {
        return Err(Error::ZeroVector);
    }

    let (eigenvalues, vectors) = hermitian_eigen(&sys.h);
    let lambda_min = eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    let lambda_max = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if lambda_min < 1e-12 {
        return Err(Error::SingularMatrix {
            column: 0,
            pivot: lambda_min,
        });
    }
    let c = cfg.rotation_constant.unwrap_or(lambda_min);
    if c > lambda_min * (1.0 + 1e-12) {
        return Err(Error::param(
            "rotation_constant",
            format!("{c} exceeds the smallest eigenvalue magnitude {lambda_min}"),
        ));
    }
    let t = cfg.evolution_time.unwrap_or_else(|| HhlConfig::default_time(cfg.n_clock, lambda_max));

    let powers = (0..cfg.n_clock)
        .map(|k| {
            let u = vectors.clone()
                * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    eigenvalues.len(),
                    eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, l * t * (1u64 << k) as f64)),
                ))
                * vectors.adjoint();
            vec![GateOp::unitary(u, reg.data.clone()).controlled([reg.clock[k]])]
        })
        .collect();
    let circuit = hhl_circuit(&reg, powers, &rotation_angles(cfg.n_clock, t, c))?;

    // Exact load of |r> on the data register; clock and ancilla start at 0.
    let dim_total = 1usize << reg.total();
    let mut init = vec![Complex64::new(0.0, 0.0); dim_total];
    for (j, &v) in sys.rhs.iter().enumerate() {
        init[j] = Complex64::new(v / rhs_norm, 0.0);
    }
    let out = apply_noiseless(&StateVector::from_amplitudes(init)?, &circuit)?;

    let ancilla_bit = 1usize << reg.ancilla;
    let success_probability: f64 = out
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| i & ancilla_bit != 0)
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>()
        .min(1.0);
    if cfg.post_select && success_probability < STARVATION_THRESHOLD {
        return Err(Error::PostSelectionStarved(success_probability));
    }
    let sampled_success_probability = if cfg.shots > 0 {
        let counts = sample_measurement(&out, &[reg.ancilla], cfg.shots, cfg.seed)?;
        Some(counts.get("1").copied().unwrap_or(0) as f64 / cfg.shots as f64)
    } else {
        None
    };

    // Ancilla = 1, clock = 0 slice.
    let branch: Vec<Complex64> = (0..sys.dim()).map(|j| out.amplitudes()[j | ancilla_bit]).collect();
    let branch_norm = branch.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if branch_norm == 0.0 {
        return Err(Error::PostSelectionStarved(success_probability));
    }
    let scale = rhs_norm * success_probability.sqrt() / c / branch_norm;
    let embedded: Vec<f64> = branch.iter().map(|a| a.re * scale).collect();

    let classical = exact_inverse(&eigenvalues, &vectors, &sys.rhs);
    let classical_norm = classical.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let overlap: Complex64 = classical.iter().zip(&branch).map(|(x, y)| x.conj() * y).sum();
    let solution_fidelity = (overlap.norm_sqr() / (classical_norm * branch_norm).powi(2)).min(1.0);

    let hx = sys.h.map(|z| z.re) * nalgebra::DVector::from_column_slice(&embedded);
    let residual = max_abs(&hx.iter().zip(&sys.rhs).map(|(a, b)| a - b).collect::<Vec<_>>());

    let prep = real_state_preparation(&sys.rhs, &reg.data);
    let counts = prep.iter().fold(circuit.gate_counts(), |acc, op| acc + crate::qsim::decomposed_counts(op));

    let report = HhlReport {
        success_probability,
        sampled_success_probability,
        solution_fidelity,
        residual,
        gate_counts: counts.to_map(),
        n_qubits_total: reg.total(),
        evolution_time: t,
        rotation_constant: c,
        aliasing: aliases(&eigenvalues, cfg.n_clock, t),
    };
    Ok((sys.extract_solution(&embedded), report))
}

fn exact_inverse(eigenvalues: &[f64], vectors: &DMatrix<Complex64>, rhs: &[f64]) -> Vec<Complex64> {
    let b = nalgebra::DVector::from_iterator(rhs.len(), rhs.iter().map(|&v| Complex64::new(v, 0.0)));
    let coeffs = vectors.adjoint() * b;
    let scaled = nalgebra::DVector::from_iterator(
        coeffs.len(),
        coeffs.iter().zip(eigenvalues).map(|(a, &l)| a / l),
    );
    (vectors * scaled).iter().copied().collect()
}

/// Largest admissible term count for `n` data qubits. A one-qubit block
/// embedding is a multiple of `X`, so only one term fits.
pub fn term_capacity(n_qubits: usize) -> usize {
    if n_qubits <= 1 {
        1
    } else {
        1usize << (2 * n_qubits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateCountReport {
    pub n_qubits: usize,
    pub terms: usize,
    pub n_qubits_total: usize,
    pub counts: GateCounts,
}

/// The newsvendor reference system under the order-nothing policy: eight
/// inventory levels, four order sizes, uniform demand on `{0..3}`,
/// `h = 1`, `l = 9`, `gamma = 0.95`.
pub fn reference_system() -> Result<(SparseMatrix, Vec<f64>)> {
    let params = InventoryParams {
        holding_cost: 1.0,
        lost_sales_cost: 9.0,
        unit_order_cost: 0.0,
        gamma: 0.95,
        max_inventory: 7,
        max_order: 3,
    };
    let mdp = build_inventory_mdp(params, DemandDistribution::uniform(3))?;
    let b = bellman_system_matrix(&mdp, &Policy::constant(mdp.n_states(), 0), mdp.params().gamma)?;
    Ok((b, mdp.reward().to_vec()))
}

/// Gate count of the HHL circuit for the leading `2^{N-1}` block of `b`
/// (embedded to `2^N`), with evolution by a first-order product of the `L`
/// largest controlled Pauli exponentials.
pub fn gate_count_report(b: &SparseMatrix, r: &[f64], n_qubits: usize, terms: usize, cfg: &HhlConfig) -> Result<GateCountReport> {
    cfg.validate()?;
    if n_qubits == 0 || n_qubits > MAX_DATA_QUBITS || terms == 0 || terms > term_capacity(n_qubits) {
        return Err(Error::DisallowedCell { n_qubits, terms });
    }
    let block = 1usize << (n_qubits - 1);
    if b.rows() < block || r.len() < block {
        return Err(Error::DimensionMismatch {
            expected: block,
            actual: b.rows().min(r.len()),
        });
    }
    let sub = SparseMatrix::from_triplets(
        block,
        block,
        b.triplets().filter(|&(i, j, _)| i < block && j < block),
    )?;
    let sys = hermitian_embed(&sub, &r[..block])?;
    let all = pauli_coefficients(&sys.h)?;
    let kept = LcuDecomposition::from_terms(n_qubits, all.into_iter().take(terms))?;

    // Truncated spectrum sets the time scale and rotation angles.
    let (eigenvalues, _) = hermitian_eigen(&kept.reconstruct());
    let lambda_max = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs())).max(1e-12);
    let lambda_min = eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs())).max(1e-12);
    let t = cfg.evolution_time.unwrap_or_else(|| HhlConfig::default_time(cfg.n_clock, lambda_max));
    let c = cfg.rotation_constant.unwrap_or(lambda_min);

    let reg = Registers::new(n_qubits, cfg.n_clock);
    // Padding terms keep a zero coefficient when the matrix has fewer than L.
    let mut strings: Vec<(f64, crate::pauli::PauliString)> =
        kept.terms().iter().map(|t| (t.coefficient, t.pauli.clone())).collect();
    let mut filler = 0;
    while strings.len() < terms {
        let p = crate::pauli::PauliString::from_index(n_qubits, filler);
        if !strings.iter().any(|(_, q)| *q == p) {
            strings.push((0.0, p));
        }
        filler += 1;
    }
    let powers = (0..cfg.n_clock)
        .map(|k| {
            let scale = t * (1u64 << k) as f64;
            strings
                .iter()
                .flat_map(|(a, p)| controlled_pauli_exponential(p, a * scale, reg.clock[k], &reg.data))
                .collect()
        })
        .collect();
    let circuit = hhl_circuit(&reg, powers, &rotation_angles(cfg.n_clock, t, c))?;
    let prep = real_state_preparation(&sys.rhs, &reg.data);
    let counts = prep.iter().fold(circuit.gate_counts(), |acc, op| acc + crate::qsim::decomposed_counts(op));
    Ok(GateCountReport {
        n_qubits,
        terms,
        n_qubits_total: reg.total(),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub n_qubits: usize,
    pub terms: usize,
    /// `None` for disallowed cells.
    pub gates: Option<usize>,
}

/// Every `(N, L)` cell for `N = 1..=n_max`, computed in parallel.
pub fn gate_count_grid(b: &SparseMatrix, r: &[f64], n_max: usize, term_list: &[usize], cfg: &HhlConfig) -> Result<Vec<GridCell>> {
    if n_max == 0 || n_max > MAX_DATA_QUBITS {
        return Err(Error::param("n_max", format!("must lie in 1..={MAX_DATA_QUBITS}, got {n_max}")));
    }
    if term_list.is_empty() {
        return Err(Error::param("l_list", "empty list"));
    }
    let cells: Vec<(usize, usize)> = (1..=n_max)
        .flat_map(|n| term_list.iter().map(move |&l| (n, l)))
        .collect();
    cells
        .into_par_iter()
        .map(|(n, l)| match gate_count_report(b, r, n, l, cfg) {
            Ok(rep) => Ok(GridCell {
                n_qubits: n,
                terms: l,
                gates: Some(rep.counts.total()),
            }),
            Err(Error::DisallowedCell { .. }) => Ok(GridCell {
                n_qubits: n,
                terms: l,
                gates: None,
            }),
            Err(e) => Err(e),
        })
        .collect()
}

/// `N,L,gates` with `disallowed` in rejected cells.
pub fn grid_csv(cells: &[GridCell]) -> String {
    let mut out = String::from("N,L,gates\n");
    for c in cells {
        match c.gates {
            Some(g) => writeln!(out, "{},{},{}", c.n_qubits, c.terms, g),
            None => writeln!(out, "{},{},disallowed", c.n_qubits, c.terms),
        }
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_system(d: &[f64], rhs: &[f64]) -> EmbeddedSystem {
        let n = d.len();
        let b = SparseMatrix::from_triplets(n, n, d.iter().enumerate().map(|(i, &v)| (i, i, v))).unwrap();
        hermitian_embed(&b, rhs).unwrap()
    }

    #[test]
    fn rhs_state_is_normalized() {
        let psi = prepare_rhs_state(&[3.0, 4.0]).unwrap();
        assert!((psi.amplitudes()[0].re - 0.6).abs() < 1e-15);
        assert!((psi.amplitudes()[1].re - 0.8).abs() < 1e-15);
        assert!(matches!(prepare_rhs_state(&[0.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn clock_reads_twos_complement() {
        assert_eq!(signed_clock(0, 3), 0);
        assert_eq!(signed_clock(3, 3), 3);
        assert_eq!(signed_clock(4, 3), -4);
        assert_eq!(signed_clock(7, 3), -1);
    }

    #[test]
    fn identity_inverts_exactly() {
        let h = DMatrix::identity(4, 4);
        let sys = EmbeddedSystem::from_hermitian(h, vec![0.5, -1.0, 2.0, 0.25]).unwrap();
        let cfg = HhlConfig {
            n_clock: 2,
            rotation_constant: Some(0.5),
            ..Default::default()
        };
        let (x, report) = hhl_solve(&sys, &cfg).unwrap();
        assert!((report.solution_fidelity - 1.0).abs() < 1e-6);
        assert!((report.success_probability - 0.25).abs() < 1e-12);
        for (a, b) in x.iter().zip(&sys.rhs) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(!report.aliasing);
    }

    #[test]
    fn exact_phase_diagonal() {
        let sys = diag_system(&[1.0, 0.5], &[1.0, 1.0]);
        let cfg = HhlConfig {
            n_clock: 3,
            evolution_time: Some(PI / 2.0),
            ..Default::default()
        };
        let (q, report) = hhl_solve(&sys, &cfg).unwrap();
        assert!(report.solution_fidelity >= 1.0 - 1e-6);
        assert!((q[0] - 1.0).abs() < 1e-9 && (q[1] - 2.0).abs() < 1e-9);
        assert!(report.residual < 1e-9);
        // Analytic ancilla probability: sum |r_l|^2 (C / lambda_l)^2.
        let expected = 0.5 * (0.25 + 1.0);
        assert!((report.success_probability - expected).abs() < 1e-6);
    }

    #[test]
    fn sampled_success_tracks_exact() {
        let sys = diag_system(&[1.0, 0.5], &[1.0, 1.0]);
        let cfg = HhlConfig {
            n_clock: 3,
            evolution_time: Some(PI / 2.0),
            shots: 20_000,
            seed: 7,
            ..Default::default()
        };
        let (_, report) = hhl_solve(&sys, &cfg).unwrap();
        let p = report.success_probability;
        let sd = (p * (1.0 - p) / 20_000.0).sqrt();
        assert!((report.sampled_success_probability.unwrap() - p).abs() < 5.0 * sd);
    }

    #[test]
    fn rejects_oversized_rotation_constant() {
        let sys = diag_system(&[1.0, 0.5], &[1.0, 1.0]);
        let cfg = HhlConfig {
            rotation_constant: Some(0.9),
            ..Default::default()
        };
        assert!(hhl_solve(&sys, &cfg).is_err());
    }

    #[test]
    fn one_qubit_clock_rejected() {
        let sys = diag_system(&[1.0], &[1.0]);
        let cfg = HhlConfig {
            n_clock: 1,
            ..Default::default()
        };
        assert!(hhl_solve(&sys, &cfg).is_err());
    }

    #[test]
    fn evolution_of_zero_is_identity() {
        let sys = EmbeddedSystem::from_hermitian(DMatrix::zeros(2, 2), vec![1.0, 0.0]).unwrap();
        let u = evolution_unitary(&sys, 1.3);
        assert!((u - DMatrix::<Complex64>::identity(2, 2)).camax() < 1e-14);
    }

    #[test]
    fn disallowed_cells() {
        let (b, r) = reference_system().unwrap();
        let cfg = HhlConfig::default();
        assert!(matches!(gate_count_report(&b, &r, 1, 4, &cfg), Err(Error::DisallowedCell { .. })));
        let one = gate_count_report(&b, &r, 1, 1, &cfg).unwrap().counts.total();
        assert!((30..=750).contains(&one), "{one}");
        let counts: Vec<usize> = [1, 4, 9, 16]
            .iter()
            .map(|&l| gate_count_report(&b, &r, 2, l, &cfg).unwrap().counts.total())
            .collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    }

    #[test]
    fn grid_csv_marks_disallowed() {
        let (b, r) = reference_system().unwrap();
        let grid = gate_count_grid(&b, &r, 2, &[1, 4], &HhlConfig::default()).unwrap();
        let csv = grid_csv(&grid);
        assert!(csv.contains("1,4,disallowed"));
        assert_eq!(csv.lines().count(), 5);
    }
}
