//! Python module `qpi`: thin wrappers over `qpi_core`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qpi_core::hhl::{gate_count_grid, hhl_solve, reference_system, HhlConfig};
use qpi_core::lcu::{hermitian_embed, lcu_decompose, lcu_truncate};
use qpi_core::mdp::{build_inventory_mdp, DemandDistribution, InventoryParams};
use qpi_core::policy_iteration::{policy_iteration, EvaluatorKind};
use qpi_core::qram::{decoherence_budget, epsilon_bound, LogBase, QramHardwareParams};
use qpi_core::sparse::SparseMatrix;
use qpi_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Evaluation { .. }
        | Error::SingularMatrix { .. }
        | Error::IterationCap(_)
        | Error::PostSelectionStarved(_)
        | Error::ZeroDenominator
        | Error::Diverged(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn square(rows: &[Vec<f64>]) -> PyResult<SparseMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let triplets = rows
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(move |(j, &v)| (i, j, v)));
    SparseMatrix::from_triplets(n, n, triplets).map_err(to_py)
}

/// Policy iteration on the lost-sales inventory model. Returns the policy and
/// the per-iteration residuals.
#[pyfunction]
#[pyo3(signature = (holding_cost, lost_sales_cost, gamma, max_inventory, max_order, demand_pmf, unit_order_cost=0.0, evaluator="exact", max_iters=20, n_clock=6))]
#[allow(clippy::too_many_arguments)]
fn solve_inventory(
    holding_cost: f64,
    lost_sales_cost: f64,
    gamma: f64,
    max_inventory: usize,
    max_order: usize,
    demand_pmf: Vec<f64>,
    unit_order_cost: f64,
    evaluator: &str,
    max_iters: usize,
    n_clock: usize,
) -> PyResult<(Vec<usize>, Vec<f64>)> {
    let params = InventoryParams {
        holding_cost,
        lost_sales_cost,
        unit_order_cost,
        gamma,
        max_inventory,
        max_order,
    };
    let evaluator = match evaluator {
        "exact" => EvaluatorKind::Exact,
        "hhl" => EvaluatorKind::Hhl(HhlConfig {
            n_clock,
            ..HhlConfig::default()
        }),
        other => return Err(PyValueError::new_err(format!("unknown evaluator `{other}`"))),
    };
    let demand = DemandDistribution::new(demand_pmf).map_err(to_py)?;
    let mdp = build_inventory_mdp(params, demand).map_err(to_py)?;
    let (policy, trace) = policy_iteration(&mdp, gamma, max_iters, &evaluator).map_err(to_py)?;
    let residuals = trace.records.iter().map(|r| r.residual).collect();
    Ok((policy.actions().to_vec(), residuals))
}

/// `(label, coefficient)` pairs for the Hermitian embedding of a square real matrix.
#[pyfunction]
#[pyo3(signature = (matrix, terms=None))]
fn lcu_terms(matrix: Vec<Vec<f64>>, terms: Option<usize>) -> PyResult<Vec<(String, f64)>> {
    let b = square(&matrix)?;
    let sys = hermitian_embed(&b, &vec![0.0; b.rows()]).map_err(to_py)?;
    let mut lcu = lcu_decompose(&sys.h).map_err(to_py)?;
    if let Some(k) = terms {
        lcu = lcu_truncate(&lcu, k).map_err(to_py)?;
    }
    Ok(lcu.terms().iter().map(|t| (t.pauli.to_string(), t.coefficient)).collect())
}

/// Simulated HHL on `B q = r`. Returns `(q, success_probability, fidelity)`.
#[pyfunction]
#[pyo3(signature = (matrix, rhs, n_clock=6, evolution_time=None))]
fn hhl(matrix: Vec<Vec<f64>>, rhs: Vec<f64>, n_clock: usize, evolution_time: Option<f64>) -> PyResult<(Vec<f64>, f64, f64)> {
    let b = square(&matrix)?;
    let sys = hermitian_embed(&b, &rhs).map_err(to_py)?;
    let cfg = HhlConfig {
        n_clock,
        evolution_time,
        ..HhlConfig::default()
    };
    let (q, report) = hhl_solve(&sys, &cfg).map_err(to_py)?;
    Ok((q, report.success_probability, report.solution_fidelity))
}

/// Gate counts for `N = 1..=n_max` and each `L`; `None` marks disallowed cells.
#[pyfunction]
#[pyo3(signature = (n_max=6, l_list=vec![1, 4, 9, 16]))]
fn gate_counts(n_max: usize, l_list: Vec<usize>) -> PyResult<Vec<(usize, usize, Option<usize>)>> {
    let (b, r) = reference_system().map_err(to_py)?;
    let cells = gate_count_grid(&b, &r, n_max, &l_list, &HhlConfig::default()).map_err(to_py)?;
    Ok(cells.into_iter().map(|c| (c.n_qubits, c.terms, c.gates)).collect())
}

/// Error rate per step for a QRAM of size `n` at infidelity `one_minus_f`.
#[pyfunction]
#[pyo3(signature = (one_minus_f, n, log_base="2"))]
fn qram_epsilon(one_minus_f: f64, n: f64, log_base: &str) -> PyResult<f64> {
    let base: LogBase = log_base.parse().map_err(to_py)?;
    epsilon_bound(one_minus_f, n, base).map_err(to_py)
}

/// Largest `kappa + gamma` in rad/s that keeps the error rate at `epsilon`.
#[pyfunction]
#[pyo3(signature = (epsilon, g_d=None, nu=None, c_d=None))]
fn qram_budget(epsilon: f64, g_d: Option<f64>, nu: Option<f64>, c_d: Option<f64>) -> PyResult<f64> {
    let d = QramHardwareParams::default();
    let hw = QramHardwareParams {
        g_d: g_d.unwrap_or(d.g_d),
        nu: nu.unwrap_or(d.nu),
        c_d: c_d.unwrap_or(d.c_d),
        kappa_plus_gamma: 0.0,
    };
    decoherence_budget(epsilon, &hw).map_err(to_py)
}

#[pymodule]
fn qpi(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(solve_inventory, m)?)?;
    m.add_function(wrap_pyfunction!(lcu_terms, m)?)?;
    m.add_function(wrap_pyfunction!(hhl, m)?)?;
    m.add_function(wrap_pyfunction!(gate_counts, m)?)?;
    m.add_function(wrap_pyfunction!(qram_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(qram_budget, m)?)?;
    Ok(())
}
