use proptest::prelude::*;

use qpi_core::mdp::{build_inventory_mdp, DemandDistribution, InventoryParams};
use qpi_core::policy_iteration::{policy_improvement, policy_iteration, EvaluatorKind, QVector};

proptest! {
    #[test]
    fn improvement_ignores_shift_and_scale(
        values in prop::collection::vec(-100.0f64..0.0, 4..40),
        n_actions in 1usize..5,
        shift in -50.0f64..50.0,
        scale in 0.1f64..10.0,
    ) {
        let len = values.len() / n_actions * n_actions;
        let base = QVector::new(values[..len].to_vec(), n_actions).unwrap();
        let moved: Vec<f64> = base.values().iter().map(|v| scale * v + shift).collect();
        let moved = QVector::new(moved, n_actions).unwrap();
        prop_assert_eq!(policy_improvement(&base), policy_improvement(&moved));
    }

    #[test]
    fn greedy_action_attains_row_max(
        values in prop::collection::vec(-10.0f64..10.0, 6..48),
        n_actions in 2usize..6,
    ) {
        let len = values.len() / n_actions * n_actions;
        prop_assume!(len > 0);
        let q = QVector::new(values[..len].to_vec(), n_actions).unwrap();
        let pi = policy_improvement(&q);
        for s in 0..q.n_states() {
            let best = q.row(s).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(q.get(s, pi.action(s)) >= best - 1e-9 * best.abs().max(1.0));
        }
    }

    #[test]
    fn state_values_never_decrease(
        max_inventory in 1usize..10,
        max_order in 1usize..5,
        h in 0.1f64..4.0,
        l in 1.0f64..25.0,
        gamma in 0.6f64..0.97,
        weights in prop::collection::vec(0.01f64..1.0, 1..8),
    ) {
        let total: f64 = weights.iter().sum();
        let params = InventoryParams {
            holding_cost: h,
            lost_sales_cost: l,
            unit_order_cost: 0.5,
            gamma,
            max_inventory,
            max_order: max_order.min(max_inventory),
        };
        let demand = DemandDistribution::new(weights.iter().map(|w| w / total).collect()).unwrap();
        let mdp = build_inventory_mdp(params, demand).unwrap();
        let (_, trace) = policy_iteration(&mdp, gamma, 50, &EvaluatorKind::Exact).unwrap();
        prop_assert!(trace.converged);
        let values: Vec<Vec<f64>> = trace
            .records
            .iter()
            .map(|r| QVector::new(r.q.clone(), mdp.n_actions()).unwrap().state_values(&r.policy))
            .collect();
        for pair in values.windows(2) {
            for (before, after) in pair[0].iter().zip(&pair[1]) {
                prop_assert!(after >= &(before - 1e-9 * before.abs().max(1.0)));
            }
        }
        for r in &trace.records {
            prop_assert!(r.residual < 1e-8);
        }
    }
}
