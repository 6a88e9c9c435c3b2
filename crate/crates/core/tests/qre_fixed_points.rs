use pdqre::game::PayoffMatrix;
use pdqre::qre::{qre_objective, response, solve_qre, SolverConfig};
use proptest::prelude::*;

fn coarse() -> SolverConfig {
    SolverConfig {
        start_grid: 9,
        ..SolverConfig::default()
    }
}

#[test]
fn accepted_points_are_fixed_points_of_the_logit_map() {
    let m = PayoffMatrix::default();
    for lambda in [0.5, 2.0, 4.0, 5.5, 7.0, 8.0, 12.0] {
        let pts = solve_qre(lambda, &SolverConfig::default()).unwrap();
        assert!(!pts.is_empty());
        for p in pts {
            let r = response(&m, lambda, p.alpha, p.gamma);
            assert!((r.sigma_alpha - p.alpha).abs() < 1e-6, "{p:?}");
            assert!((r.sigma_gamma - p.gamma).abs() < 1e-6, "{p:?}");
        }
    }
}

#[test]
fn equilibrium_count_by_regime() {
    // One root below the first fold, three between the folds, one above.
    assert_eq!(solve_qre(3.0, &SolverConfig::default()).unwrap().len(), 1);
    assert_eq!(solve_qre(7.0, &SolverConfig::default()).unwrap().len(), 3);
    assert_eq!(solve_qre(10.0, &SolverConfig::default()).unwrap().len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn objective_is_non_negative(l in 0.0..50.0f64, a in 0.0..=1.0f64, g in 0.0..=1.0f64) {
        if let Ok(f) = qre_objective(&PayoffMatrix::default(), l, a, g) {
            prop_assert!(f >= 0.0 && f <= 2.0);
        }
    }

    #[test]
    fn some_equilibrium_exists(l in 0.0..15.0f64) {
        let pts = solve_qre(l, &coarse()).unwrap();
        prop_assert!(!pts.is_empty());
        prop_assert!(pts.iter().all(|p| p.objective < 1e-12));
    }
}
