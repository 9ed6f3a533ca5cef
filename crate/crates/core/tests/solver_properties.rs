use std::sync::Arc;

use fracinf::{
    build_grid, check_comparison, coincidence_set, envelope_constant, holder_bound,
    holder_seminorm, l_full, monotone_bracket, residual_norm, solve_dirichlet, solve_obstacle,
    sub_envelope, super_envelope, BoundaryData, GridSpec, MonotoneSource, ObstacleConfig,
    PointSet, Scheme, Solver, SolverConfig, Start,
};
use proptest::prelude::*;

fn square(side: usize, alpha: f64) -> Arc<PointSet> {
    Arc::new(build_grid(&GridSpec::unit(&[side, side], alpha)).unwrap())
}

fn boundary_strategy() -> impl Strategy<Value = (f64, f64, f64)> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
}

fn source_strategy() -> impl Strategy<Value = MonotoneSource> {
    prop_oneof![
        (-2.0..2.0f64).prop_map(|c| MonotoneSource::constant(c).unwrap()),
        (0.0..3.0f64, 0.5..2.5f64).prop_map(|(a, p)| MonotoneSource::power(a, p).unwrap()),
        Just(MonotoneSource::table(vec![-1.0, 0.0, 1.0], vec![-1.0, 0.0, 2.0]).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn converged_solutions_are_sandwiched_and_holder((a, b, c) in boundary_strategy(), f in source_strategy()) {
        let ps = square(8, 0.5);
        let g = BoundaryData::from_fn(&ps, 0.25, |x| a + b * x[0] + c * (3.0 * x[1]).sin()).unwrap();
        let (u, report) = solve_dirichlet(&ps, &g, &f, &SolverConfig::default()).unwrap();
        prop_assert!(report.final_residual >= 0.0 && report.final_residual < 1e-8);

        let k = envelope_constant(&ps, &g, &f).unwrap();
        let (lo, hi) = (sub_envelope(&ps, &g, k), super_envelope(&ps, &g, k));
        prop_assert!(check_comparison(&u, &hi, 1e-10).unwrap().holds);
        prop_assert!(check_comparison(&lo, &u, 1e-10).unwrap().holds);

        for (&i, &v) in ps.boundary().iter().zip(g.values()) {
            prop_assert_eq!(u.get(i).to_bits(), v.to_bits());
        }
        let all: Vec<usize> = (0..ps.len()).collect();
        let semi = holder_seminorm(&u, 0.25, &all).unwrap();
        prop_assert!(semi <= holder_bound(&ps, &g, &f).unwrap() + 1e-9);
        prop_assert!(report.lambda_bound >= u.sup_norm() - 1e-12);
    }

    #[test]
    fn gauss_seidel_iterates_are_monotone((a, b, c) in boundary_strategy(), f in source_strategy()) {
        let ps = square(7, 0.4);
        let g = BoundaryData::from_fn(&ps, 0.2, |x| a * x[0] * x[1] + b * x[1] + c).unwrap();
        let (lo, hi) = monotone_bracket(&ps, &g, &f).unwrap();
        let solver = Solver::new(ps.clone());
        for (start, dir) in [(lo, 1.0), (hi, -1.0)] {
            let mut u = start;
            for _ in 0..40 {
                let before = u.values().to_vec();
                let change = solver.sweep(&mut u, &f, Scheme::GaussSeidel, 1e-12).unwrap();
                for (new, old) in u.values().iter().zip(&before) {
                    prop_assert!(dir * (new - old) >= -1e-12);
                }
                if change < 1e-12 {
                    break;
                }
            }
        }
    }

    #[test]
    fn homogeneous_solutions_shift_and_flip((a, b, c) in boundary_strategy(), shift in -5.0..5.0f64) {
        let ps = square(6, 0.6);
        let zero = MonotoneSource::zero();
        let cfg = SolverConfig::default();
        let base = |x: &[f64]| a * x[0] + b * x[1] * x[1] + c * x[0] * x[1];
        let g = BoundaryData::from_fn(&ps, 0.3, base).unwrap();
        let moved = BoundaryData::from_fn(&ps, 0.3, |x| base(x) + shift).unwrap();
        let flipped = BoundaryData::from_fn(&ps, 0.3, |x| -base(x)).unwrap();
        let (u, _) = solve_dirichlet(&ps, &g, &zero, &cfg).unwrap();
        let (v, _) = solve_dirichlet(&ps, &moved, &zero, &cfg).unwrap();
        let (w, _) = solve_dirichlet(&ps, &flipped, &zero, &cfg).unwrap();
        for i in 0..ps.len() {
            prop_assert!((v.get(i) - u.get(i) - shift).abs() < 1e-8);
            prop_assert!((w.get(i) + u.get(i)).abs() < 1e-8);
        }
    }
}

#[test]
fn jacobi_matches_gauss_seidel_in_two_dimensions() {
    let ps = square(10, 0.5);
    let g = BoundaryData::from_fn(&ps, 0.25, |x| x[0] - x[1] * x[1]).unwrap();
    let f = MonotoneSource::power(1.0, 1.0).unwrap();
    let (gs, _) = solve_dirichlet(&ps, &g, &f, &SolverConfig::default()).unwrap();
    let jacobi = SolverConfig {
        scheme: Scheme::Jacobi,
        ..SolverConfig::default()
    };
    let (jac, _) = solve_dirichlet(&ps, &g, &f, &jacobi).unwrap();
    assert!(gs.sup_distance(&jac) < 1e-8);
}

#[test]
fn both_starts_agree_for_negative_constant_source() {
    let ps = square(9, 0.7);
    let g = BoundaryData::from_fn(&ps, 0.35, |x| (x[0] * 5.0).cos()).unwrap();
    let cfg = SolverConfig {
        start: Start::Both,
        ..SolverConfig::default()
    };
    let (_, report) = solve_dirichlet(&ps, &g, &MonotoneSource::constant(-1.5).unwrap(), &cfg).unwrap();
    assert!(report.bracket_gap.unwrap() <= 1e-6);
}

fn obstacle_problem() -> (Arc<PointSet>, BoundaryData, MonotoneSource) {
    let ps = square(13, 0.5);
    let g = BoundaryData::from_fn(&ps, 0.25, |x| if x[0] == 1.0 { x[1] } else { 0.0 }).unwrap();
    (ps, g, MonotoneSource::constant(3.0).unwrap())
}

#[test]
fn obstacle_solution_invariants() {
    let (ps, g, f) = obstacle_problem();
    let cfg = ObstacleConfig::default();
    let res = solve_obstacle(&ps, &g, &f, &cfg).unwrap();
    let u = &res.u;
    assert!(u.values().iter().all(|&v| v >= 0.0));
    for (&i, &v) in ps.boundary().iter().zip(g.values()) {
        assert_eq!(u.get(i).to_bits(), v.to_bits());
    }
    let positive: Vec<usize> = ps.interior().iter().copied().filter(|&i| u.get(i) > 1e-6).collect();
    assert!(residual_norm(u, &f, &positive).unwrap() <= 1e-6);
    // one-sided inequality on the contact region
    let band = coincidence_set(u, 1e-6);
    assert!(!band.is_empty());
    for &i in &band {
        assert!(l_full(u, i) - res.terminal_source.eval(u.get(i)) <= cfg.inner.residual_tol);
    }
}

#[test]
fn obstacle_continuation_is_uniformly_holder_and_cauchy() {
    let (ps, g, f) = obstacle_problem();
    let bound = holder_bound(&ps, &g, &f).unwrap();
    let all: Vec<usize> = (0..ps.len()).collect();
    let mut steps = 0;
    for k in 1..=8 {
        let cfg = ObstacleConfig {
            eps_steps: k,
            ..ObstacleConfig::default()
        };
        let res = solve_obstacle(&ps, &g, &f, &cfg).unwrap();
        assert!(holder_seminorm(&res.u, 0.25, &all).unwrap() <= bound + 1e-9);
        steps = res.eps_trace.len();
        if k == 8 {
            let changes: Vec<f64> = res.eps_trace.iter().skip(1).map(|s| s.sup_change).collect();
            assert!(changes.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "{changes:?}");
        }
    }
    assert!(steps >= 2);
}
