//! Variational linear solver: a layered `Ry` + CZ ansatz trained by plain
//! gradient descent on the global overlap cost
//! `C = 1 - |<r|B|x>|^2 / <x|B^2|x>`, with `B` given as a Pauli sum.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lcu::LcuDecomposition;
use crate::qsim::{apply_noiseless, apply_trajectory, Circuit, Gate, GateOp, NoiseModel, StateVector};

/// Consecutive cost increases tolerated before giving up.
pub const DIVERGENCE_WINDOW: usize = 50;

const DENOMINATOR_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    pub n_qubits: usize,
    pub n_layers: usize,
    #[serde(default)]
    pub entangler: Entangler,
    /// Starting parameters; drawn uniformly from `[-pi, pi)` when absent.
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
}

impl AnsatzConfig {
    pub fn new(n_qubits: usize, n_layers: usize) -> Self {
        Self {
            n_qubits,
            n_layers,
            entangler: Entangler::default(),
            initial: None,
        }
    }

    pub fn with_entangler(mut self, entangler: Entangler) -> Self {
        self.entangler = entangler;
        self
    }

    pub fn n_params(&self) -> usize {
        self.n_qubits * (self.n_layers + 1)
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::param("n_qubits", "must be at least 1"));
        }
        if theta.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                actual: theta.len(),
            });
        }
        Ok(())
    }
}

/// CZ placement between rotation layers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entangler {
    /// CZ on every neighbouring pair in each layer. The CZs commute, so
    /// depth beyond a few layers adds no reachable directions.
    #[default]
    Chain,
    /// CZ on pairs `(0,1), (2,3), ...` in odd layers and `(1,2), (3,4), ...`
    /// in even layers. Universal for real states at sufficient depth.
    Alternating,
}

impl Entangler {
    fn pairs(self, n: usize, layer: usize) -> impl Iterator<Item = usize> {
        let (start, step) = match self {
            Entangler::Chain => (0, 1),
            Entangler::Alternating => ((layer + 1) % 2, 2),
        };
        (start..n.saturating_sub(1)).step_by(step)
    }
}

/// An `Ry` layer, then `n_layers` rounds of (CZ entangler, `Ry` layer).
pub fn ansatz_circuit(cfg: &AnsatzConfig, theta: &[f64]) -> Result<Circuit> {
    cfg.check(theta)?;
    let n = cfg.n_qubits;
    let mut c = Circuit::new(n);
    for layer in 0..=cfg.n_layers {
        if layer > 0 {
            for q in cfg.entangler.pairs(n, layer) {
                c.push(GateOp::cz(q, q + 1))?;
            }
        }
        for q in 0..n {
            c.push(GateOp::single(Gate::Ry(theta[layer * n + q]), q))?;
        }
    }
    Ok(c)
}

pub fn ansatz_state(cfg: &AnsatzConfig, theta: &[f64]) -> Result<StateVector> {
    let c = ansatz_circuit(cfg, theta)?;
    apply_noiseless(&StateVector::zero(cfg.n_qubits)?, &c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    ParameterShift,
    FiniteDifference(f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    #[default]
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqlsConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    pub gradient: GradientMethod,
    pub cost: CostKind,
    /// Training stops once the cost drops below this.
    pub target_cost: f64,
    pub seed: u64,
    pub noise: Option<NoiseModel>,
    /// Trajectories averaged per expectation when `noise` is set.
    pub trajectories: usize,
}

impl Default for VqlsConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_iters: 500,
            gradient: GradientMethod::ParameterShift,
            cost: CostKind::Global,
            target_cost: 1e-6,
            seed: 0,
            noise: None,
            trajectories: 20,
        }
    }
}

impl VqlsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::param("learning_rate", "must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        if let GradientMethod::FiniteDifference(h) = self.gradient {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::param("gradient", "finite-difference step must be positive"));
            }
        }
        if self.noise.is_some() && self.trajectories == 0 {
            return Err(Error::param("trajectories", "must be at least 1 with noise"));
        }
        Ok(())
    }
}

/// Numerator `|<r|B|x>|^2` and denominator `<x|B^2|x>` of the cost. Both are
/// linear in `|x><x|`, so noisy trajectories average them separately.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CostParts {
    pub numerator: f64,
    pub denominator: f64,
}

impl CostParts {
    pub fn cost(&self) -> Result<f64> {
        if !(self.denominator > DENOMINATOR_FLOOR) {
            return Err(Error::ZeroDenominator);
        }
        Ok(1.0 - self.numerator / self.denominator)
    }
}

/// The linear system as seen by the optimizer.
#[derive(Debug, Clone)]
pub struct VqlsProblem {
    lcu: LcuDecomposition,
    rhs: StateVector,
}

impl VqlsProblem {
    pub fn new(lcu: LcuDecomposition, rhs: &[f64]) -> Result<Self> {
        let rhs = StateVector::from_real(rhs)?;
        if rhs.n_qubits() != lcu.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: lcu.n_qubits(),
                actual: rhs.n_qubits(),
            });
        }
        Ok(Self { lcu, rhs })
    }

    pub fn lcu(&self) -> &LcuDecomposition {
        &self.lcu
    }

    pub fn rhs(&self) -> &StateVector {
        &self.rhs
    }

    /// Cost parts from the overlaps `<r|P_i|x>` and the Gram entries
    /// `<P_i x|P_j x>`.
    pub fn parts(&self, x: &StateVector) -> CostParts {
        let terms = self.lcu.terms();
        let applied: Vec<Vec<Complex64>> = terms.iter().map(|t| x.pauli_applied(&t.pauli)).collect();
        let r = self.rhs.amplitudes();
        let overlap: Complex64 = terms
            .iter()
            .zip(&applied)
            .map(|(t, px)| t.coefficient * r.iter().zip(px).map(|(a, b)| a.conj() * b).sum::<Complex64>())
            .sum();
        let mut denominator = 0.0;
        for (i, ti) in terms.iter().enumerate() {
            for (j, tj) in terms.iter().enumerate().skip(i) {
                let g: Complex64 = applied[i].iter().zip(&applied[j]).map(|(a, b)| a.conj() * b).sum();
                let weight = if i == j { 1.0 } else { 2.0 };
                denominator += weight * ti.coefficient * tj.coefficient * g.re;
            }
        }
        CostParts {
            numerator: overlap.norm_sqr(),
            denominator,
        }
    }

    /// `B x` applied through the Pauli sum.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
        let mut scratch = vec![Complex64::new(0.0, 0.0); x.len()];
        for t in self.lcu.terms() {
            t.pauli.apply_into(x, &mut scratch);
            for (o, s) in out.iter_mut().zip(&scratch) {
                *o += t.coefficient * s;
            }
        }
        out
    }
}

/// Evaluates cost parts, noiseless or averaged over seeded trajectories.
struct Evaluator<'a> {
    problem: &'a VqlsProblem,
    ansatz: &'a AnsatzConfig,
    noise: Option<(NoiseModel, usize)>,
}

impl Evaluator<'_> {
    fn parts(&self, theta: &[f64], stream: u64) -> Result<CostParts> {
        let circuit = ansatz_circuit(self.ansatz, theta)?;
        let zero = StateVector::zero(self.ansatz.n_qubits)?;
        match self.noise {
            None => Ok(self.problem.parts(&apply_noiseless(&zero, &circuit)?)),
            Some((model, count)) => {
                let mut sum = CostParts::default();
                for t in 0..count as u64 {
                    let mut rng = model.trajectory_rng(stream * count as u64 + t);
                    let p = self.problem.parts(&apply_trajectory(&zero, &circuit, &model, &mut rng)?);
                    sum.numerator += p.numerator;
                    sum.denominator += p.denominator;
                }
                Ok(CostParts {
                    numerator: sum.numerator / count as f64,
                    denominator: sum.denominator / count as f64,
                })
            }
        }
    }

    fn cost(&self, theta: &[f64], stream: u64) -> Result<f64> {
        self.parts(theta, stream)?.cost()
    }

    /// Gradient; `stream` reserves `2 * n_params` consecutive noise streams.
    fn gradient(&self, theta: &[f64], method: GradientMethod, stream: u64) -> Result<Vec<f64>> {
        let shifted = |k: usize, delta: f64| {
            let mut t = theta.to_vec();
            t[k] += delta;
            t
        };
        match method {
            GradientMethod::ParameterShift => {
                let centre = self.parts(theta, stream)?;
                (0..theta.len())
                    .into_par_iter()
                    .map(|k| {
                        let base = stream + 1 + 2 * k as u64;
                        let plus = self.parts(&shifted(k, FRAC_PI_2), base)?;
                        let minus = self.parts(&shifted(k, -FRAC_PI_2), base + 1)?;
                        let dn = 0.5 * (plus.numerator - minus.numerator);
                        let dd = 0.5 * (plus.denominator - minus.denominator);
                        if !(centre.denominator > DENOMINATOR_FLOOR) {
                            return Err(Error::ZeroDenominator);
                        }
                        Ok(-(dn * centre.denominator - centre.numerator * dd) / centre.denominator.powi(2))
                    })
                    .collect()
            }
            GradientMethod::FiniteDifference(h) => (0..theta.len())
                .into_par_iter()
                .map(|k| {
                    let base = stream + 1 + 2 * k as u64;
                    Ok((self.cost(&shifted(k, h), base)? - self.cost(&shifted(k, -h), base + 1)?) / (2.0 * h))
                })
                .collect(),
        }
    }
}

fn noise_of(cfg: &VqlsConfig) -> Option<(NoiseModel, usize)> {
    cfg.noise.filter(|m| !m.is_noiseless()).map(|m| (m, cfg.trajectories))
}

/// Cost at `theta`. Noisy costs average `cfg.trajectories` trajectories.
pub fn vqls_cost(theta: &[f64], problem: &VqlsProblem, ansatz: &AnsatzConfig, cfg: &VqlsConfig) -> Result<f64> {
    check_width(problem, ansatz)?;
    Evaluator {
        problem,
        ansatz,
        noise: noise_of(cfg),
    }
    .cost(theta, 0)
}

pub fn vqls_gradient(theta: &[f64], problem: &VqlsProblem, ansatz: &AnsatzConfig, cfg: &VqlsConfig) -> Result<Vec<f64>> {
    check_width(problem, ansatz)?;
    Evaluator {
        problem,
        ansatz,
        noise: noise_of(cfg),
    }
    .gradient(theta, cfg.gradient, 0)
}

fn check_width(problem: &VqlsProblem, ansatz: &AnsatzConfig) -> Result<()> {
    if problem.lcu.n_qubits() != ansatz.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: problem.lcu.n_qubits(),
            actual: ansatz.n_qubits,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub cost: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
    pub wall_time_secs: f64,
    pub final_theta: Vec<f64>,
    pub converged: bool,
}

impl TrainTrace {
    pub fn initial_cost(&self) -> f64 {
        self.records.first().map_or(f64::NAN, |r| r.cost)
    }

    pub fn final_cost(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.cost)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,cost,grad_norm\n");
        for r in &self.records {
            writeln!(out, "{},{},{}", r.iter, r.cost, r.grad_norm).unwrap();
        }
        out
    }
}

/// Starting parameters: the configured ones or uniform in `[-pi, pi)`.
pub fn initial_theta(ansatz: &AnsatzConfig, seed: u64) -> Result<Vec<f64>> {
    match &ansatz.initial {
        Some(theta) => {
            ansatz.check(theta)?;
            Ok(theta.clone())
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..ansatz.n_params()).map(|_| rng.random_range(-PI..PI)).collect())
        }
    }
}

/// Trains the ansatz and returns `s |x(theta*)>` with `s` the least-squares
/// scale minimizing `||s B x - r||`, together with the training trace.
pub fn vqls_solve(
    lcu: &LcuDecomposition,
    rhs: &[f64],
    ansatz: &AnsatzConfig,
    cfg: &VqlsConfig,
) -> Result<(Vec<f64>, TrainTrace)> {
    cfg.validate()?;
    let problem = VqlsProblem::new(lcu.clone(), rhs)?;
    check_width(&problem, ansatz)?;
    let eval = Evaluator {
        problem: &problem,
        ansatz,
        noise: noise_of(cfg),
    };
    let start = Instant::now();
    let mut theta = initial_theta(ansatz, cfg.seed)?;
    // Each iteration consumes one stream for the cost and two per parameter.
    let per_iter = 2 + 2 * theta.len() as u64;
    let mut records = Vec::new();
    let mut increases = 0;
    let mut converged = false;
    for iter in 0..=cfg.max_iters {
        let stream = iter as u64 * per_iter;
        let cost = eval.cost(&theta, stream)?;
        if let Some(prev) = records.last().map(|r: &TraceRecord| r.cost) {
            increases = if cost > prev { increases + 1 } else { 0 };
            if increases >= DIVERGENCE_WINDOW {
                return Err(Error::Diverged(increases));
            }
        }
        let grad = eval.gradient(&theta, cfg.gradient, stream + 1)?;
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        records.push(TraceRecord { iter, cost, grad_norm });
        if cost < cfg.target_cost || iter == cfg.max_iters {
            converged = cost < cfg.target_cost;
            break;
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= cfg.learning_rate * g;
        }
    }

    let x = ansatz_state(ansatz, &theta)?;
    let bx = problem.apply(x.amplitudes());
    let num: f64 = bx.iter().zip(rhs).map(|(a, &r)| a.re * r).sum();
    let den: f64 = bx.iter().map(|a| a.norm_sqr()).sum();
    if !(den > DENOMINATOR_FLOOR) {
        return Err(Error::ZeroDenominator);
    }
    let scale = num / den;
    let solution = x.amplitudes().iter().map(|a| a.re * scale).collect();
    Ok((
        solution,
        TrainTrace {
            records,
            wall_time_secs: start.elapsed().as_secs_f64(),
            final_theta: theta,
            converged,
        },
    ))
}
