//! Periodic-review inventory control with lost sales as a finite MDP.
//!
//! States are on-hand inventory levels `0..=max_inventory`, actions are order
//! quantities `0..=max_order`. Orders arrive immediately; post-order stock is
//! capped at `max_inventory`; unmet demand is lost. State-action pairs are
//! laid out state-major: `index = state * n_actions + action`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

const PMF_TOLERANCE: f64 = 1e-12;

/// Probability mass function over demand values `0..probabilities.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandDistribution {
    probabilities: Vec<f64>,
}

impl DemandDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::param("demand_pmf", "empty support"));
        }
        if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::param("demand_pmf", format!("invalid probability {p}")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PMF_TOLERANCE {
            return Err(Error::param(
                "demand_pmf",
                format!("probabilities sum to {total}, expected 1"),
            ));
        }
        Ok(Self { probabilities })
    }

    /// Uniform demand on `0..=max_demand`.
    pub fn uniform(max_demand: usize) -> Self {
        let p = 1.0 / (max_demand + 1) as f64;
        Self {
            probabilities: vec![p; max_demand + 1],
        }
    }

    /// Demand equal to `d` with certainty.
    pub fn deterministic(d: usize) -> Self {
        let mut probabilities = vec![0.0; d + 1];
        probabilities[d] = 1.0;
        Self { probabilities }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `D + 1`, the number of demand values including zero-probability ones.
    pub fn support_size(&self) -> usize {
        self.probabilities.len()
    }

    /// Number of demand values carrying positive probability.
    pub fn positive_support(&self) -> usize {
        self.probabilities.iter().filter(|&&p| p > 0.0).count()
    }

    /// `P(D <= y)`.
    pub fn cdf(&self, y: usize) -> f64 {
        self.probabilities.iter().take(y + 1).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventoryParams {
    pub holding_cost: f64,
    pub lost_sales_cost: f64,
    #[serde(default)]
    pub unit_order_cost: f64,
    pub gamma: f64,
    pub max_inventory: usize,
    pub max_order: usize,
}

impl InventoryParams {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("holding_cost", self.holding_cost),
            ("lost_sales_cost", self.lost_sales_cost),
            ("unit_order_cost", self.unit_order_cost),
        ];
        for (field, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::param(field, format!("must be finite and >= 0, got {value}")));
            }
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::param("gamma", format!("must lie in (0, 1), got {}", self.gamma)));
        }
        if self.max_order < 1 {
            return Err(Error::param("max_order", "must be at least 1"));
        }
        if self.max_inventory < self.max_order {
            return Err(Error::param(
                "max_inventory",
                format!(
                    "must be >= max_order ({}), got {}",
                    self.max_order, self.max_inventory
                ),
            ));
        }
        Ok(())
    }
}

/// Deterministic stationary policy: one order quantity per inventory level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Policy {
    action_of: Vec<usize>,
}

impl Policy {
    pub fn new(action_of: Vec<usize>, n_actions: usize) -> Result<Self> {
        if let Some(&a) = action_of.iter().find(|&&a| a >= n_actions) {
            return Err(Error::param(
                "policy",
                format!("action {a} out of range 0..{n_actions}"),
            ));
        }
        Ok(Self { action_of })
    }

    pub fn constant(n_states: usize, action: usize) -> Self {
        Self {
            action_of: vec![action; n_states],
        }
    }

    pub fn action(&self, state: usize) -> usize {
        self.action_of[state]
    }

    pub fn actions(&self) -> &[usize] {
        &self.action_of
    }

    pub fn len(&self) -> usize {
        self.action_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.action_of.is_empty()
    }

    /// Number of states on which the two policies disagree.
    pub fn changed_states(&self, other: &Policy) -> usize {
        self.action_of
            .iter()
            .zip(&other.action_of)
            .filter(|(a, b)| a != b)
            .count()
    }
}

#[derive(Debug, Clone)]
pub struct MdpInstance {
    params: InventoryParams,
    demand: DemandDistribution,
    n_states: usize,
    n_actions: usize,
    /// `P(i' | i, j)`: rows are state-action pairs, columns next states.
    kernel: SparseMatrix,
    reward: Vec<f64>,
}

/// Builds the transition kernel and expected one-period reward.
///
/// Post-order stock is `y = min(i + j, max_inventory)`; the next state is
/// `max(y - d, 0)` and the reward is `-h (y - d)^+ - l (d - y)^+ - c j`,
/// averaged over the demand distribution.
pub fn build_inventory_mdp(params: InventoryParams, demand: DemandDistribution) -> Result<MdpInstance> {
    params.validate()?;
    if demand.positive_support() == 0 {
        return Err(Error::param("demand_pmf", "empty support"));
    }
    let n_states = params.max_inventory + 1;
    let n_actions = params.max_order + 1;

    let mut triplets = Vec::with_capacity(n_states * n_actions * demand.positive_support());
    let mut reward = Vec::with_capacity(n_states * n_actions);
    for i in 0..n_states {
        for j in 0..n_actions {
            let row = i * n_actions + j;
            let stock = (i + j).min(params.max_inventory);
            let mut expected = 0.0;
            for (d, &p) in demand.probabilities().iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let leftover = stock.saturating_sub(d);
                let lost = d.saturating_sub(stock);
                expected -= p * (params.holding_cost * leftover as f64 + params.lost_sales_cost * lost as f64);
                triplets.push((row, leftover, p));
            }
            reward.push(expected - params.unit_order_cost * j as f64);
        }
    }
    let kernel = SparseMatrix::from_triplets(n_states * n_actions, n_states, triplets)?;

    Ok(MdpInstance {
        params,
        demand,
        n_states,
        n_actions,
        kernel,
        reward,
    })
}

impl MdpInstance {
    pub fn params(&self) -> &InventoryParams {
        &self.params
    }

    pub fn demand(&self) -> &DemandDistribution {
        &self.demand
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_pairs(&self) -> usize {
        self.n_states * self.n_actions
    }

    pub fn pair_index(&self, state: usize, action: usize) -> usize {
        state * self.n_actions + action
    }

    pub fn kernel(&self) -> &SparseMatrix {
        &self.kernel
    }

    /// `P(next | state, action)`.
    pub fn transition_prob(&self, state: usize, action: usize, next: usize) -> f64 {
        self.kernel.get(self.pair_index(state, action), next)
    }

    pub fn reward(&self) -> &[f64] {
        &self.reward
    }

    pub fn validate_policy(&self, policy: &Policy) -> Result<()> {
        if policy.len() != self.n_states {
            return Err(Error::DimensionMismatch {
                expected: self.n_states,
                actual: policy.len(),
            });
        }
        Policy::new(policy.actions().to_vec(), self.n_actions).map(|_| ())
    }
}

/// `P^pi` on state-action pairs: `((i,j),(i',j')) = P(i'|i,j) [j' = pi(i')]`.
pub fn policy_transition_matrix(mdp: &MdpInstance, policy: &Policy) -> Result<SparseMatrix> {
    mdp.validate_policy(policy)?;
    let n = mdp.n_pairs();
    let triplets = mdp
        .kernel
        .triplets()
        .map(|(row, next, p)| (row, mdp.pair_index(next, policy.action(next)), p));
    SparseMatrix::from_triplets(n, n, triplets)
}

/// `B = I - gamma P^pi`, the policy-evaluation system matrix.
pub fn bellman_system_matrix(mdp: &MdpInstance, policy: &Policy, gamma: f64) -> Result<SparseMatrix> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::param("gamma", format!("must lie in [0, 1), got {gamma}")));
    }
    let p = policy_transition_matrix(mdp, policy)?;
    SparseMatrix::identity(mdp.n_pairs()).linear_combination(1.0, &p, -gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// `P^pi`: at most one entry per positive-probability demand value.
    Transition,
    /// `I - gamma P^pi`: the transition pattern plus the diagonal.
    System,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparsityStats {
    pub nnz: usize,
    pub bound: usize,
}

impl SparsityStats {
    pub fn within_bound(&self) -> bool {
        self.nnz <= self.bound
    }
}

pub fn sparsity_stats(m: &SparseMatrix, mdp: &MdpInstance, kind: MatrixKind) -> SparsityStats {
    let per_row = match kind {
        MatrixKind::Transition => mdp.demand.positive_support(),
        MatrixKind::System => mdp.demand.positive_support() + 1,
    };
    let stats = SparsityStats {
        nnz: m.nnz(),
        bound: per_row * mdp.n_pairs(),
    };
    debug_assert!(stats.within_bound(), "{stats:?}");
    stats
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_state(h: f64, l: f64, c: f64) -> MdpInstance {
        let params = InventoryParams {
            holding_cost: h,
            lost_sales_cost: l,
            unit_order_cost: c,
            gamma: 0.9,
            max_inventory: 1,
            max_order: 1,
        };
        build_inventory_mdp(params, DemandDistribution::deterministic(1)).unwrap()
    }

    fn params(max_inventory: usize, max_order: usize, h: f64, l: f64) -> InventoryParams {
        InventoryParams {
            holding_cost: h,
            lost_sales_cost: l,
            unit_order_cost: 0.0,
            gamma: 0.95,
            max_inventory,
            max_order,
        }
    }

    /// Direct simulation of one period for a fixed demand realisation.
    fn step(i: usize, j: usize, d: usize, p: &InventoryParams) -> (usize, f64) {
        let y = (i + j).min(p.max_inventory) as i64;
        let d = d as i64;
        let next = (y - d).max(0);
        let cost = p.holding_cost * (y - d).max(0) as f64 + p.lost_sales_cost * (d - y).max(0) as f64;
        (next as usize, -cost - p.unit_order_cost * j as f64)
    }

    #[test]
    fn two_state_deterministic_demand() {
        let mdp = two_state(1.0, 10.0, 0.0);
        assert_eq!(mdp.transition_prob(0, 0, 0), 1.0);
        assert_eq!(mdp.transition_prob(0, 1, 0), 1.0);
        assert_eq!(mdp.transition_prob(1, 0, 0), 1.0);
        assert_eq!(mdp.reward()[mdp.pair_index(0, 0)], -10.0);
        assert_eq!(mdp.reward()[mdp.pair_index(0, 1)], 0.0);
        assert_eq!(mdp.reward()[mdp.pair_index(1, 0)], 0.0);
    }

    #[test]
    fn enumeration_oracle_agrees_with_kernel() {
        let p = InventoryParams {
            unit_order_cost: 0.5,
            ..params(5, 3, 1.5, 4.0)
        };
        let demand = DemandDistribution::new(vec![0.1, 0.2, 0.0, 0.4, 0.3]).unwrap();
        let mdp = build_inventory_mdp(p.clone(), demand.clone()).unwrap();
        for i in 0..mdp.n_states() {
            for j in 0..mdp.n_actions() {
                let mut probs = vec![0.0; mdp.n_states()];
                let mut reward = 0.0;
                for (d, &pd) in demand.probabilities().iter().enumerate() {
                    let (next, r) = step(i, j, d, &p);
                    probs[next] += pd;
                    reward += pd * r;
                }
                for (next, &expected) in probs.iter().enumerate() {
                    assert!((mdp.transition_prob(i, j, next) - expected).abs() < 1e-15);
                }
                assert!((mdp.reward()[mdp.pair_index(i, j)] - reward).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_demand_clamps_and_charges_holding() {
        let p = params(4, 3, 2.0, 5.0);
        let mdp = build_inventory_mdp(p, DemandDistribution::deterministic(0)).unwrap();
        for i in 0..5 {
            for j in 0..4 {
                let y = (i + j).min(4);
                assert_eq!(mdp.transition_prob(i, j, y), 1.0);
                assert_eq!(mdp.reward()[mdp.pair_index(i, j)], -2.0 * y as f64);
            }
        }
    }

    #[test]
    fn uniform_demand_expected_reward() {
        let mdp = build_inventory_mdp(params(7, 3, 1.0, 9.0), DemandDistribution::uniform(3)).unwrap();
        assert!((mdp.reward()[mdp.pair_index(0, 2)] - (-3.0)).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(DemandDistribution::new(vec![]).is_err());
        assert!(DemandDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(DemandDistribution::new(vec![1.2, -0.2]).is_err());
        let bad_gamma = InventoryParams {
            gamma: 1.0,
            ..params(3, 2, 1.0, 1.0)
        };
        assert!(build_inventory_mdp(bad_gamma, DemandDistribution::uniform(1)).is_err());
        assert!(build_inventory_mdp(params(1, 2, 1.0, 1.0), DemandDistribution::uniform(1)).is_err());
        let negative_cost = InventoryParams {
            holding_cost: -1.0,
            ..params(3, 2, 1.0, 1.0)
        };
        assert!(negative_cost.validate().is_err());
    }

    #[test]
    fn policy_matrix_deterministic_demand() {
        let mdp = two_state(1.0, 10.0, 0.0);
        let p = policy_transition_matrix(&mdp, &Policy::constant(2, 0)).unwrap();
        for row in 0..4 {
            let entries: Vec<_> = p.row(row).collect();
            assert_eq!(entries, vec![(0, 1.0)]);
        }
    }

    #[test]
    fn zero_demand_policy_matrix_is_zero_one() {
        let mdp = build_inventory_mdp(params(3, 2, 1.0, 1.0), DemandDistribution::deterministic(0)).unwrap();
        let policy = Policy::new(vec![2, 0, 1, 0], 3).unwrap();
        let p = policy_transition_matrix(&mdp, &policy).unwrap();
        for row in 0..mdp.n_pairs() {
            let entries: Vec<_> = p.row(row).collect();
            assert_eq!(entries.len(), 1);
            assert_eq!(entries[0].1, 1.0);
        }
        let stats = sparsity_stats(&p, &mdp, MatrixKind::Transition);
        assert_eq!(stats.nnz, mdp.n_pairs());
    }

    #[test]
    fn sparsity_bounds() {
        let mdp = two_state(1.0, 10.0, 0.0);
        let b = bellman_system_matrix(&mdp, &Policy::constant(2, 1), 0.9).unwrap();
        let stats = sparsity_stats(&b, &mdp, MatrixKind::System);
        assert_eq!(stats.bound, 8);
        assert!(stats.within_bound());

        let mdp = build_inventory_mdp(params(7, 3, 1.0, 9.0), DemandDistribution::uniform(3)).unwrap();
        let p = policy_transition_matrix(&mdp, &Policy::constant(8, 1)).unwrap();
        for row in 0..mdp.n_pairs() {
            assert!(p.row(row).count() <= 4);
        }
        let stats = sparsity_stats(&p, &mdp, MatrixKind::Transition);
        assert_eq!(stats.bound, 128);
        assert!(stats.nnz <= 128);
    }

    #[test]
    fn bellman_matrix_identities() {
        let mdp = build_inventory_mdp(params(5, 2, 1.0, 3.0), DemandDistribution::uniform(2)).unwrap();
        let policy = Policy::new(vec![2, 1, 0, 0, 1, 0], 3).unwrap();
        let b0 = bellman_system_matrix(&mdp, &policy, 0.0).unwrap();
        assert_eq!(b0, SparseMatrix::identity(mdp.n_pairs()));

        let gamma = 0.9;
        let b = bellman_system_matrix(&mdp, &policy, gamma).unwrap().to_dense();
        let p = policy_transition_matrix(&mdp, &policy).unwrap().to_dense();
        let identity = nalgebra::DMatrix::identity(mdp.n_pairs(), mdp.n_pairs());
        let recovered = (identity - &b) / gamma;
        assert!((recovered - &p).amax() <= 1e-14);

        // Row diagonal dominance: |off-diagonal| sums never exceed gamma.
        for r in 0..mdp.n_pairs() {
            let off: f64 = (0..mdp.n_pairs()).filter(|&c| c != r).map(|c| b[(r, c)].abs()).sum();
            assert!(off <= gamma + 1e-12);
            assert!(b[(r, r)] >= 1.0 - gamma - 1e-12);
        }
        assert!(bellman_system_matrix(&mdp, &policy, 1.0).is_err());
    }

    #[test]
    fn policy_validation() {
        assert!(Policy::new(vec![0, 3], 3).is_err());
        let mdp = two_state(1.0, 1.0, 0.0);
        assert!(policy_transition_matrix(&mdp, &Policy::constant(3, 0)).is_err());
    }
}
