//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qpi_core::hhl::{gate_count_grid, hhl_solve, reference_system, HhlConfig};
use qpi_core::lcu::{hermitian_embed, histogram_csv, lcu_decompose, lcu_histogram, lcu_truncate};
use qpi_core::mdp::{bellman_system_matrix, build_inventory_mdp, DemandDistribution, InventoryParams, Policy};
use qpi_core::pauli::PauliString;
use qpi_core::policy_iteration::{policy_evaluation_exact, policy_iteration, value_iteration_oracle, EvaluatorKind};
use qpi_core::qram::{
    decoherence_budget, epsilon_bound, epsilon_from_hardware, infidelity, log_space, LogBase, QramHardwareParams,
};
use qpi_core::qsim::NoiseModel;
use qpi_core::vqls::{vqls_gradient, vqls_solve, AnsatzConfig, GradientMethod, VqlsConfig, VqlsProblem};

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn run(id: usize, name: &str, budget: Duration, f: fn() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let passed = outcome.passed && in_time;
    println!(
        "criterion {id} [{}] {name}: {} ({:.2?} of {:.0?}{})",
        if passed { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed,
        budget,
        if in_time { "" } else { ", over budget" }
    );
    passed
}

fn random_pmf(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut pmf: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let head: f64 = pmf[..len - 1].iter().sum();
    pmf[len - 1] = 1.0 - head;
    pmf
}

fn policy_iteration_matches_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    let instances = 60;
    for _ in 0..instances {
        let n_states = rng.random_range(2..=16);
        let n_actions = rng.random_range(2..=8.min(n_states));
        let gamma = [0.8, 0.9, 0.95][rng.random_range(0..3)];
        let params = InventoryParams {
            holding_cost: rng.random_range(0.1..3.0),
            lost_sales_cost: rng.random_range(1.0..20.0),
            unit_order_cost: rng.random_range(0.0..2.0),
            gamma,
            max_inventory: n_states - 1,
            max_order: n_actions - 1,
        };
        let support = rng.random_range(1..=n_states);
        let demand = DemandDistribution::new(random_pmf(&mut rng, support)).unwrap();
        let mdp = build_inventory_mdp(params, demand).unwrap();
        let (pi, _) = policy_iteration(&mdp, gamma, 50, &EvaluatorKind::Exact).unwrap();
        let (_, oracle) = value_iteration_oracle(&mdp, gamma, 1e-10).unwrap();
        if pi != oracle {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("{}/{instances} random instances agree", instances - mismatches))
}

fn newsvendor_order_up_to() -> Outcome {
    let (h, l) = (1.0, 9.0);
    let params = InventoryParams {
        holding_cost: h,
        lost_sales_cost: l,
        unit_order_cost: 0.0,
        gamma: 0.95,
        max_inventory: 7,
        max_order: 3,
    };
    let demand = DemandDistribution::uniform(3);
    // Critical ratio: smallest y with P(D <= y) >= l / (l + h).
    let ratio = l / (l + h);
    let mut cdf = 0.0;
    let mut level = 0;
    for (y, p) in demand.probabilities().iter().enumerate() {
        cdf += p;
        if cdf >= ratio - 1e-12 {
            level = y;
            break;
        }
    }
    let expected: Vec<usize> = (0..8).map(|i| level.saturating_sub(i).min(3)).collect();
    let mdp = build_inventory_mdp(params, demand).unwrap();
    let (pi, _) = policy_iteration(&mdp, 0.95, 20, &EvaluatorKind::Exact).unwrap();
    check(
        pi.actions() == expected.as_slice(),
        format!("policy {:?}, order-up-to-{level} oracle {:?}", pi.actions(), expected),
    )
}

fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<Complex64> {
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        h[(i, i)] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
        for j in i + 1..dim {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

/// `Tr(H P) / 2^N` with the Pauli string densified.
fn dense_coefficient(h: &DMatrix<Complex64>, p: &PauliString) -> f64 {
    (h * p.to_matrix()).trace().re / h.nrows() as f64
}

fn lcu_reconstruction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_rec = 0.0f64;
    let mut worst_parseval = 0.0f64;
    let mut worst_coef = 0.0f64;
    for k in 0..100 {
        let n = 1 + k % 4;
        let h = random_hermitian(&mut rng, 1 << n);
        let lcu = lcu_decompose(&h).unwrap();
        worst_rec = worst_rec.max((lcu.reconstruct() - &h).camax());
        let frob: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let weight: f64 = lcu.terms().iter().map(|t| t.coefficient.powi(2)).sum::<f64>() * (1 << n) as f64;
        worst_parseval = worst_parseval.max((weight - frob).abs());
        for t in lcu.terms() {
            worst_coef = worst_coef.max((t.coefficient - dense_coefficient(&h, &t.pauli)).abs());
        }
    }
    let (b, r) = reference_system().unwrap();
    let sys = hermitian_embed(&b, &r).unwrap();
    let lcu = lcu_decompose(&sys.h).unwrap();
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("lcu_histogram.csv");
    let written = std::fs::write(&path, histogram_csv(&lcu_histogram(&lcu))).is_ok();
    check(
        worst_rec <= 1e-10 && worst_parseval <= 1e-10 && worst_coef <= 1e-12 && written,
        format!(
            "reconstruction {worst_rec:.1e}, Parseval {worst_parseval:.1e}, {} terms histogrammed to {}",
            lcu.len(),
            path.display()
        ),
    )
}

fn two_state_mdp() -> qpi_core::mdp::MdpInstance {
    let params = InventoryParams {
        holding_cost: 1.0,
        lost_sales_cost: 10.0,
        unit_order_cost: 0.0,
        gamma: 0.9,
        max_inventory: 1,
        max_order: 1,
    };
    build_inventory_mdp(params, DemandDistribution::deterministic(1)).unwrap()
}

fn hhl_cases() -> Outcome {
    let diag = qpi_core::sparse::SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 0.5)]).unwrap();
    let sys = hermitian_embed(&diag, &[1.0, 1.0]).unwrap();
    let exact_cfg = HhlConfig {
        n_clock: 3,
        evolution_time: Some(PI / 2.0),
        ..Default::default()
    };
    let (_, exact) = hhl_solve(&sys, &exact_cfg).unwrap();

    let mdp = two_state_mdp();
    let b = bellman_system_matrix(&mdp, &Policy::constant(2, 0), 0.9).unwrap();
    let sys = hermitian_embed(&b, mdp.reward()).unwrap();
    let cfg = HhlConfig::default();
    let (q_hhl, _) = hhl_solve(&sys, &cfg).unwrap();
    // Fidelity of the returned Q against an independent LU solve.
    let q = policy_evaluation_exact(&b, mdp.reward()).unwrap();
    let dot: f64 = q.iter().zip(&q_hhl).map(|(a, b)| a * b).sum();
    let fid = dot * dot / (q.iter().map(|x| x * x).sum::<f64>() * q_hhl.iter().map(|x| x * x).sum::<f64>());

    let (pi_exact, _) = policy_iteration(&mdp, 0.9, 20, &EvaluatorKind::Exact).unwrap();
    let (pi_hhl, _) = policy_iteration(&mdp, 0.9, 20, &EvaluatorKind::Hhl(cfg)).unwrap();
    check(
        exact.solution_fidelity >= 1.0 - 1e-6 && fid >= 0.90 && pi_exact == pi_hhl,
        format!(
            "exact-phase fidelity {:.9}, MDP fidelity {fid:.4} (n_clock 6), policies {:?} / {:?}",
            exact.solution_fidelity,
            pi_exact.actions(),
            pi_hhl.actions()
        ),
    )
}

fn gate_count_table() -> Outcome {
    let (b, r) = reference_system().unwrap();
    let terms = [1, 4, 9, 16];
    let grid = gate_count_grid(&b, &r, 6, &terms, &HhlConfig::default()).unwrap();
    let mut ok = grid.len() == 24;
    let mut worst_slope = 0.0f64;
    for n in 1..=6 {
        let row: Vec<_> = grid.iter().filter(|c| c.n_qubits == n).collect();
        for c in &row {
            // Only the one-qubit row rejects more than one term.
            let disallowed = n == 1 && c.terms > 1;
            ok &= c.gates.is_none() == disallowed;
        }
        let points: Vec<(f64, f64)> = row
            .iter()
            .filter_map(|c| c.gates.map(|g| ((c.terms as f64).ln(), (g as f64).ln())))
            .collect();
        ok &= points.windows(2).all(|w| w[0].1 <= w[1].1);
        if points.len() >= 2 {
            let m = points.len() as f64;
            let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
            let (mx, my) = (sx / m, sy / m);
            let num: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
            let den: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
            worst_slope = worst_slope.max(num / den);
        }
    }
    let first = grid[0].gates.unwrap_or(0);
    ok &= (30..=750).contains(&first) && worst_slope <= 2.5;
    check(
        ok,
        format!("(1,1) = {first} gates, max log-log slope {worst_slope:.3}, disallowed cells match"),
    )
}

fn vqls_runs() -> Outcome {
    let (b, r) = reference_system().unwrap();
    let sys = hermitian_embed(&b, &r).unwrap();
    let lcu = lcu_truncate(&lcu_decompose(&sys.h).unwrap(), 5).unwrap();
    let ansatz = AnsatzConfig::new(6, 2);
    let cfg = VqlsConfig {
        learning_rate: 0.5,
        max_iters: 500,
        target_cost: 1e-2,
        seed: 7,
        ..Default::default()
    };
    let (_, clean) = vqls_solve(&lcu, &sys.rhs, &ansatz, &cfg).unwrap();
    let noisy_cfg = VqlsConfig {
        target_cost: 0.0,
        max_iters: 200,
        noise: Some(NoiseModel::depolarizing(1e-3, 7).unwrap()),
        trajectories: 20,
        ..cfg.clone()
    };
    let (_, noisy) = vqls_solve(&lcu, &sys.rhs, &ansatz, &noisy_cfg).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_gap = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=3);
        let layers = rng.random_range(0..=2);
        let h = random_hermitian(&mut rng, 1 << n).map(|z| Complex64::new(z.re, 0.0));
        let h = &h + &h.transpose();
        let rhs: Vec<f64> = (0..1 << n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let problem = VqlsProblem::new(lcu_decompose(&h).unwrap(), &rhs).unwrap();
        let a = AnsatzConfig::new(n, layers);
        let theta: Vec<f64> = (0..a.n_params()).map(|_| rng.random_range(-PI..PI)).collect();
        let base = VqlsConfig::default();
        let shift = vqls_gradient(&theta, &problem, &a, &base).unwrap();
        let fd_cfg = VqlsConfig {
            gradient: GradientMethod::FiniteDifference(1e-4),
            ..base
        };
        let fd = vqls_gradient(&theta, &problem, &a, &fd_cfg).unwrap();
        for (x, y) in shift.iter().zip(&fd) {
            worst_gap = worst_gap.max((x - y).abs());
        }
    }
    let clean_ok = clean.final_cost() < 1e-2 && clean.records.len() <= 501;
    let noisy_ok = noisy.final_cost() <= 0.5 * noisy.initial_cost();
    check(
        clean_ok && noisy_ok && worst_gap <= 1e-5,
        format!(
            "noiseless cost {:.3e} after {} iters (target < 1e-2); noisy {:.3} -> {:.3}; gradient gap {worst_gap:.1e}",
            clean.final_cost(),
            clean.records.len() - 1,
            noisy.initial_cost(),
            noisy.final_cost()
        ),
    )
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn qram_numbers() -> Outcome {
    let hw = QramHardwareParams::default();
    let floor = epsilon_from_hardware(&hw).unwrap();
    let floor_ok = rel(floor, 1e-8) < 1e-12;

    let eps = epsilon_bound(1e-3, 1e3, LogBase::Two).unwrap();
    let eps_oracle = 4.0 * 1e-3 / (1000f64.ln() / 2f64.ln()).powi(2);
    let budget = decoherence_budget(eps, &hw).unwrap();
    // Same formula with the couplings written as frequencies (Hz).
    let budget_hz_oracle = (eps_oracle - (1e3f64 / 1e7).powi(2)) * 2.0 * 1e3 / (4.5 * PI);
    let budget_hz = budget / (2.0 * PI);
    let numbers_ok = rel(eps, eps_oracle) < 1e-12
        && rel(eps, 4.03e-5) < 1e-3
        && rel(budget_hz, budget_hz_oracle) < 1e-12
        && rel(budget_hz, 5.70e-3) < 1e-3;

    let mut worst = 0.0f64;
    for n in log_space(2.0, 1e9, 40).unwrap() {
        for f in log_space(1e-9, 1e-1, 40).unwrap() {
            let e = epsilon_bound(f, n, LogBase::Two).unwrap();
            worst = worst.max(rel(infidelity(e, n, LogBase::Two).unwrap(), f));
            if e > hw.error_floor() {
                let k = decoherence_budget(e, &hw).unwrap();
                worst = worst.max(rel(epsilon_from_hardware(&hw.with_decoherence(k)).unwrap(), e));
            }
        }
    }
    check(
        floor_ok && numbers_ok && worst <= 1e-12,
        format!(
            "floor {floor:.3e}, eps {eps:.4e}, budget {budget:.4e} rad/s = {budget_hz:.4e} Hz, round-trip {worst:.1e}"
        ),
    )
}

fn main() {
    let results = [
        run(1, "policy iteration vs value iteration", Duration::from_secs(10), policy_iteration_matches_oracle),
        run(2, "newsvendor order-up-to policy", Duration::from_secs(1), newsvendor_order_up_to),
        run(3, "LCU reconstruction and Parseval", Duration::from_secs(5), lcu_reconstruction),
        run(4, "HHL exact phase and MDP solve", Duration::from_secs(60), hhl_cases),
        run(5, "gate-count grid", Duration::from_secs(120), gate_count_table),
        run(6, "VQLS convergence and gradients", Duration::from_secs(600), vqls_runs),
        run(7, "QRAM feasibility numbers", Duration::from_secs(1), qram_numbers),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
