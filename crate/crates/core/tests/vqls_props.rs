use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use qpi_core::lcu::lcu_decompose;
use qpi_core::vqls::{
    vqls_cost, vqls_gradient, vqls_solve, AnsatzConfig, Entangler, GradientMethod, VqlsConfig, VqlsProblem,
};

fn symmetric(n: usize, entries: &[f64]) -> DMatrix<Complex64> {
    let dim = 1 << n;
    let mut it = entries.iter().cycle();
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        h[(i, i)] = Complex64::new(1.0 + it.next().unwrap().abs(), 0.0);
        for j in i + 1..dim {
            let v = Complex64::new(*it.next().unwrap(), 0.0);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

prop_compose! {
    fn setup()(
        n in 1usize..4,
        layers in 0usize..3,
        alternating in any::<bool>(),
        entries in prop::collection::vec(-0.5f64..0.5, 1..40),
        rhs in prop::collection::vec(-1.0f64..1.0, 8),
        angles in prop::collection::vec(-3.2f64..3.2, 16),
    ) -> (VqlsProblem, AnsatzConfig, Vec<f64>) {
        let entangler = if alternating { Entangler::Alternating } else { Entangler::Chain };
        let ansatz = AnsatzConfig::new(n, layers).with_entangler(entangler);
        let mut rhs = rhs[..1 << n].to_vec();
        rhs[0] += 2.0;
        let problem = VqlsProblem::new(lcu_decompose(&symmetric(n, &entries)).unwrap(), &rhs).unwrap();
        let theta = angles[..ansatz.n_params()].to_vec();
        (problem, ansatz, theta)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cost_lies_in_unit_interval((problem, ansatz, theta) in setup()) {
        let c = vqls_cost(&theta, &problem, &ansatz, &VqlsConfig::default()).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&c));
    }

    #[test]
    fn shift_rule_matches_finite_difference((problem, ansatz, theta) in setup()) {
        let cfg = VqlsConfig::default();
        let exact = vqls_gradient(&theta, &problem, &ansatz, &cfg).unwrap();
        let fd_cfg = VqlsConfig { gradient: GradientMethod::FiniteDifference(1e-4), ..cfg };
        let fd = vqls_gradient(&theta, &problem, &ansatz, &fd_cfg).unwrap();
        for (a, b) in exact.iter().zip(&fd) {
            prop_assert!((a - b).abs() <= 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn training_is_deterministic((problem, ansatz, _theta) in setup(), seed in any::<u64>()) {
        let cfg = VqlsConfig { max_iters: 5, seed, ..VqlsConfig::default() };
        let rhs: Vec<f64> = problem.rhs().amplitudes().iter().map(|a| a.re).collect();
        let (x1, t1) = vqls_solve(problem.lcu(), &rhs, &ansatz, &cfg).unwrap();
        let (x2, t2) = vqls_solve(problem.lcu(), &rhs, &ansatz, &cfg).unwrap();
        prop_assert_eq!(x1, x2);
        prop_assert_eq!(t1.final_theta, t2.final_theta);
        prop_assert_eq!(t1.records, t2.records);
    }
}
