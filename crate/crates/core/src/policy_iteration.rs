//! Policy iteration with a pluggable evaluation backend, and a value
//! iteration oracle.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hhl::{hhl_solve, HhlConfig};
use crate::lcu::{hermitian_embed, lcu_decompose, lcu_truncate};
use crate::linalg::{lu_solve, max_abs};
use crate::mdp::{bellman_system_matrix, MdpInstance, Policy};
use crate::sparse::SparseMatrix;
use crate::vqls::{vqls_solve, AnsatzConfig, VqlsConfig};

/// Default iteration budget.
pub const DEFAULT_MAX_ITERS: usize = 20;

/// Value-iteration sweep cap.
pub const MAX_SWEEPS: usize = 1_000_000;

/// Relative slack under which two Q-values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// State-action values, index `i * n_actions + j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QVector {
    values: Vec<f64>,
    n_actions: usize,
}

impl QVector {
    pub fn new(values: Vec<f64>, n_actions: usize) -> Result<Self> {
        if n_actions == 0 || !values.len().is_multiple_of(n_actions) {
            return Err(Error::param(
                "q",
                format!("length {} is not a multiple of {n_actions} actions", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("q", "non-finite entry"));
        }
        Ok(Self { values, n_actions })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_states(&self) -> usize {
        self.values.len() / self.n_actions
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.n_actions..(state + 1) * self.n_actions]
    }

    /// `V(i) = Q(i, pi(i))`.
    pub fn state_values(&self, policy: &Policy) -> Vec<f64> {
        (0..self.n_states()).map(|i| self.get(i, policy.action(i))).collect()
    }
}

/// Options for the variational backend inside policy iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct VqlsEvaluator {
    pub n_layers: usize,
    /// Keep only the largest LCU terms; all terms when `None`.
    pub terms: Option<usize>,
    pub config: VqlsConfig,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum EvaluatorKind {
    #[default]
    Exact,
    Hhl(HhlConfig),
    Vqls(VqlsEvaluator),
}

impl EvaluatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EvaluatorKind::Exact => "exact",
            EvaluatorKind::Hhl(_) => "hhl",
            EvaluatorKind::Vqls(_) => "vqls",
        }
    }
}

/// `||B q - r||_inf`.
pub fn residual(b: &SparseMatrix, q: &[f64], r: &[f64]) -> Result<f64> {
    let bq = b.mul_vec(q)?;
    Ok(max_abs(&bq.iter().zip(r).map(|(a, c)| a - c).collect::<Vec<_>>()))
}

/// Solves `B q = r` by LU with partial pivoting.
pub fn policy_evaluation_exact(b: &SparseMatrix, r: &[f64]) -> Result<Vec<f64>> {
    if !b.is_square() || b.rows() != r.len() {
        return Err(Error::DimensionMismatch {
            expected: b.rows(),
            actual: r.len(),
        });
    }
    lu_solve(&b.to_dense(), r)
}

/// Solves `B q = r` with the chosen backend.
pub fn evaluate(b: &SparseMatrix, r: &[f64], evaluator: &EvaluatorKind) -> Result<Vec<f64>> {
    match evaluator {
        EvaluatorKind::Exact => policy_evaluation_exact(b, r),
        EvaluatorKind::Hhl(cfg) => {
            let sys = hermitian_embed(b, r)?;
            Ok(hhl_solve(&sys, cfg)?.0)
        }
        EvaluatorKind::Vqls(v) => {
            let sys = hermitian_embed(b, r)?;
            let full = lcu_decompose(&sys.h)?;
            let lcu = match v.terms {
                Some(k) => lcu_truncate(&full, k)?,
                None => full,
            };
            let ansatz = AnsatzConfig::new(sys.n_qubits, v.n_layers);
            let (x, _) = vqls_solve(&lcu, &sys.rhs, &ansatz, &v.config)?;
            Ok(sys.extract_solution(&x))
        }
    }
}

/// Greedy policy; near-ties go to the smaller order.
pub fn policy_improvement(q: &QVector) -> Policy {
    let scale = q.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let slack = TIE_TOLERANCE * scale;
    let actions = (0..q.n_states())
        .map(|i| {
            let row = q.row(i);
            let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.iter().position(|&v| v >= best - slack).unwrap_or(0)
        })
        .collect();
    Policy::new(actions, q.n_actions).expect("argmax is a valid action")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiRecord {
    pub k: usize,
    pub policy: Policy,
    pub q: Vec<f64>,
    pub residual: f64,
    /// States whose action differs from the previous iterate.
    pub changed_states: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PiTrace {
    pub records: Vec<PiRecord>,
    /// The final policy repeated its predecessor.
    pub converged: bool,
}

impl PiTrace {
    /// One JSON object per line with keys `changed_states`, `k`, `policy`,
    /// `residual`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let line = serde_json::json!({
                "k": r.k,
                "policy": r.policy,
                "residual": r.residual,
                "changed_states": r.changed_states,
            });
            writeln!(out, "{line}").unwrap();
        }
        out
    }
}

/// Evaluate/improve from the order-nothing policy until the policy repeats
/// or `max_iters` evaluations have run.
pub fn policy_iteration(
    mdp: &MdpInstance,
    gamma: f64,
    max_iters: usize,
    evaluator: &EvaluatorKind,
) -> Result<(Policy, PiTrace)> {
    if max_iters == 0 {
        return Err(Error::param("max_iters", "must be at least 1"));
    }
    let r = mdp.reward();
    let mut policy = Policy::constant(mdp.n_states(), 0);
    let mut trace = PiTrace::default();
    for k in 0..max_iters {
        let b = bellman_system_matrix(mdp, &policy, gamma)?;
        let q = evaluate(&b, r, evaluator).map_err(|e| Error::Evaluation {
            iteration: k,
            source: Box::new(e),
        })?;
        let res = residual(&b, &q, r)?;
        let qv = QVector::new(q, mdp.n_actions()).map_err(|e| Error::Evaluation {
            iteration: k,
            source: Box::new(e),
        })?;
        let next = policy_improvement(&qv);
        let changed = next.changed_states(&policy);
        trace.records.push(PiRecord {
            k,
            policy: policy.clone(),
            q: qv.values,
            residual: res,
            changed_states: changed,
        });
        if changed == 0 {
            trace.converged = true;
            return Ok((policy, trace));
        }
        policy = next;
    }
    Ok((policy, trace))
}

/// Bellman optimality sweeps on Q until the sup-norm change drops below
/// `tol (1 - gamma) / (2 gamma)`.
pub fn value_iteration_oracle(mdp: &MdpInstance, gamma: f64, tol: f64) -> Result<(QVector, Policy)> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::param("gamma", format!("must lie in [0, 1), got {gamma}")));
    }
    let threshold = if gamma == 0.0 {
        f64::INFINITY
    } else {
        tol * (1.0 - gamma) / (2.0 * gamma)
    };
    let n_actions = mdp.n_actions();
    let r = mdp.reward();
    let kernel = mdp.kernel();
    let mut q = vec![0.0; r.len()];
    let mut v = vec![0.0; mdp.n_states()];
    for _ in 0..MAX_SWEEPS {
        let next: Vec<f64> = (0..r.len())
            .map(|pair| r[pair] + gamma * kernel.row(pair).map(|(s, p)| p * v[s]).sum::<f64>())
            .collect();
        let change = next.iter().zip(&q).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        q = next;
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = q[i * n_actions..(i + 1) * n_actions]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
        }
        if change < threshold {
            let qv = QVector::new(q, n_actions)?;
            let policy = policy_improvement(&qv);
            return Ok((qv, policy));
        }
    }
    Err(Error::IterationCap(MAX_SWEEPS))
}
