use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use srcid::solvers::{
    optimality_residual, solve_weighted_bp, solve_weighted_lasso, BpOptions, LassoProblem, SolveRequest, SolveStatus,
    Tolerances,
};
use srcid::spectral::{decompose, weight_matrix, WeightMatrix, DEFAULT_RANK_TOL, DEFAULT_WEIGHT_FLOOR};

struct Instance {
    a: DMatrix<f64>,
    w: WeightMatrix,
    truth: Vec<f64>,
    b: Vec<f64>,
}

/// Gaussian `m x n` operator, projection weights and a 1-2 sparse truth.
fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let m = rng.random_range(3..=6);
    let n = rng.random_range(m + 2..=10);
    let a = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let sm = decompose(&a, DEFAULT_RANK_TOL).unwrap();
    let w = weight_matrix(&sm.projection(sm.rank()).unwrap(), DEFAULT_WEIGHT_FLOOR).unwrap();
    let mut truth = vec![0.0; n];
    let size = rng.random_range(1..=2);
    for j in sample(&mut rng, n, size) {
        truth[j] = rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    }
    let b = (&a * DVector::from_column_slice(&truth)).iter().copied().collect();
    Instance { a, w, truth, b }
}

fn objective(g: &DMatrix<f64>, d: &[f64], w: &WeightMatrix, alpha: f64, x: &[f64]) -> f64 {
    let r = g * DVector::from_column_slice(x) - DVector::from_column_slice(d);
    0.5 * r.norm_squared() + alpha * w.l1(x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lasso_objective_never_increases(seed in any::<u64>(), alpha in 1e-3f64..1e-1) {
        let inst = instance(seed);
        let mut req = SolveRequest::new(&inst.a, &inst.b, &inst.w, alpha);
        req.record_trace = true;
        let r = solve_weighted_lasso(&req).unwrap();
        prop_assert!(!r.trace.is_empty());
        for pair in r.trace.windows(2) {
            prop_assert!(pair[1].objective <= pair[0].objective * (1.0 + 1e-12) + 1e-15);
        }
        prop_assert!((r.objective - objective(&inst.a, &inst.b, &inst.w, alpha, &r.x)).abs() <= 1e-10 * r.objective.max(1.0));
    }

    #[test]
    fn lasso_solutions_are_stationary(seed in any::<u64>(), alpha in 1e-3f64..1.0) {
        let inst = instance(seed);
        let r = solve_weighted_lasso(&SolveRequest::new(&inst.a, &inst.b, &inst.w, alpha)).unwrap();
        prop_assert!(r.converged);
        prop_assert!(optimality_residual(&inst.a, &inst.b, &inst.w, alpha, &r.x) <= 1e-6);
    }

    #[test]
    fn weighted_lasso_equals_rescaled_unweighted(seed in any::<u64>(), alpha in 1e-3f64..1e-1) {
        // z = W x turns the weighted problem into an unweighted one for G W^{-1}.
        let inst = instance(seed);
        let inv = DMatrix::from_diagonal(&DVector::from_iterator(inst.w.len(), inst.w.w.iter().map(|v| 1.0 / v)));
        let scaled = &inst.a * inv;
        let identity = WeightMatrix::identity(inst.w.len());
        let x = solve_weighted_lasso(&SolveRequest::new(&inst.a, &inst.b, &inst.w, alpha)).unwrap().x;
        let z = solve_weighted_lasso(&SolveRequest::new(&scaled, &inst.b, &identity, alpha)).unwrap().x;
        let fx = objective(&inst.a, &inst.b, &inst.w, alpha, &x);
        let back: Vec<f64> = z.iter().zip(&inst.w.w).map(|(z, w)| z / w).collect();
        let fz = objective(&inst.a, &inst.b, &inst.w, alpha, &back);
        prop_assert!((fx - fz).abs() <= 1e-8 * fx.max(1e-12));
    }

    #[test]
    fn lasso_approaches_bp_as_alpha_vanishes(seed in any::<u64>()) {
        // Both on the projected pair (P, P x).
        let inst = instance(seed);
        let n = inst.w.len() as f64;
        let sm = decompose(&inst.a, DEFAULT_RANK_TOL).unwrap();
        let p = sm.projection(sm.rank()).unwrap();
        let d: Vec<f64> = (&p * DVector::from_column_slice(&inst.truth)).iter().copied().collect();
        let bp = solve_weighted_bp(&SolveRequest::new(&p, &d, &inst.w, 0.0), &BpOptions::default()).unwrap();
        prop_assert_eq!(bp.status, SolveStatus::Converged);
        for alpha in [1e-2, 1e-3, 1e-4] {
            let x = solve_weighted_lasso(&SolveRequest::new(&p, &d, &inst.w, alpha)).unwrap().x;
            let diff: Vec<f64> = x.iter().zip(&bp.x).map(|(a, b)| a - b).collect();
            prop_assert!(inst.w.norm(&diff) <= 10.0 * alpha * n, "alpha {}: {}", alpha, inst.w.norm(&diff));
        }
    }

    #[test]
    fn bp_is_feasible_and_no_worse_than_truth(seed in any::<u64>()) {
        let inst = instance(seed);
        let bp = solve_weighted_bp(&SolveRequest::new(&inst.a, &inst.b, &inst.w, 0.0), &BpOptions::default()).unwrap();
        let res = &inst.a * DVector::from_column_slice(&bp.x) - DVector::from_column_slice(&inst.b);
        prop_assert!(res.norm() <= 1e-8 * DVector::from_column_slice(&inst.b).norm());
        prop_assert!(inst.w.l1(&bp.x) <= inst.w.l1(&inst.truth) * (1.0 + 1e-8));
    }

    #[test]
    fn warm_start_does_not_change_the_minimizer(seed in any::<u64>(), alpha in 1e-3f64..1e-1) {
        let inst = instance(seed);
        let p = LassoProblem::new(&inst.a, &inst.b, &inst.w).unwrap();
        let tol = Tolerances::default();
        let cold = p.solve(alpha, &tol, None, false).unwrap();
        let warm = p.solve(alpha, &tol, Some(&inst.truth), false).unwrap();
        prop_assert!(cold.converged && warm.converged);
        // Convexity: |F(x) - F(x')| <= r ||W (x - x')||_1 for the larger
        // subgradient residual r of the two end points.
        let diff: Vec<f64> = cold.x.iter().zip(&warm.x).map(|(a, b)| a - b).collect();
        let bound = cold.optimality.max(warm.optimality) * inst.w.l1(&diff) + 1e-14 * cold.objective;
        prop_assert!((cold.objective - warm.objective).abs() <= bound, "{} vs {}", cold.objective, warm.objective);
        prop_assert!((cold.objective - warm.objective).abs() <= 1e-6 * cold.objective);
    }
}

#[test]
fn bp_rejects_data_outside_the_range() {
    // Rank-2 operator with three rows.
    let left = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    let right = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 0.0, -1.0, 0.0, 1.0, 1.0, 2.0]);
    let a = left * right;
    let w = WeightMatrix::identity(4);
    let r = solve_weighted_bp(&SolveRequest::new(&a, &[1.0, 1.0, 0.0], &w, 0.0), &BpOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Infeasible);
    let r = solve_weighted_bp(&SolveRequest::new(&a, &[1.0, 1.0, 2.0], &w, 0.0), &BpOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
}

#[test]
fn lasso_path_shrinks_the_weighted_norm() {
    let inst = instance(17);
    let mut last = f64::INFINITY;
    for alpha in [1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
        let x = solve_weighted_lasso(&SolveRequest::new(&inst.a, &inst.b, &inst.w, alpha))
            .unwrap()
            .x;
        let norm = inst.w.l1(&x);
        assert!(norm <= last * (1.0 + 1e-8));
        last = norm;
    }
}
