use std::collections::HashSet;

use proptest::prelude::*;

use dfas_core::config::Method;
use dfas_core::estimators::{estimate_gradient, generate_directions};
use dfas_core::ledger::EvaluationLedger;
use dfas_core::problems::{QuadraticProblem, QuadraticSpec};
use dfas_core::rng::{scenario_stream, stream};
use dfas_core::sampling::{
    augment_scenarios, condition_oracle, draw_scenarios, norm_test, required_sample_size, sample_variance, Condition,
};
use dfas_core::Scenario;

fn indices(set: &dfas_core::ScenarioSet) -> Vec<usize> {
    set.as_slice()
        .iter()
        .map(|s| match s {
            Scenario::DataIndex(i) => *i,
            Scenario::NoiseSeed(_) => panic!("expected data index"),
        })
        .collect()
}

proptest! {
    #[test]
    fn required_size_is_ceiling_of_ratio(var in 1e-6f64..1e3, theta in 0.05f64..1.0, g2 in 1e-4f64..1e2) {
        let n = required_sample_size(var, theta, g2, usize::MAX).unwrap();
        let ratio = var / (theta * theta * g2);
        prop_assert!(n as f64 >= ratio * (1.0 - 1e-12));
        prop_assert!(n == 1 || (n - 1) as f64 <= ratio * (1.0 + 1e-12));
    }

    #[test]
    fn required_size_shrinks_as_theta_grows(var in 1e-3f64..1e3, t1 in 0.05f64..1.0, t2 in 0.05f64..1.0, g2 in 1e-3f64..10.0) {
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(required_sample_size(var, lo, g2, usize::MAX).unwrap() >= required_sample_size(var, hi, g2, usize::MAX).unwrap());
    }

    #[test]
    fn failed_test_asks_for_growth(var in 1e-3f64..1e3, batch in 1usize..500, theta in 0.1f64..1.0, g2 in 1e-4f64..10.0, cap in 1usize..2000) {
        let r = norm_test(var, batch, theta, g2, cap).unwrap();
        prop_assert_eq!(r.passed, var / batch as f64 <= theta * theta * g2);
        match r.required_size {
            None => prop_assert!(r.passed),
            Some(n) => {
                prop_assert!(!r.passed);
                prop_assert!(n <= cap.max(batch));
                prop_assert!(n > batch || cap <= batch);
            }
        }
    }

    #[test]
    fn augmentation_keeps_prefix_and_stays_distinct(pool in 1usize..200, first in 1usize..100, extra in 0usize..150, seed in any::<u64>()) {
        let first = first.min(pool);
        let target = (first + extra).min(pool);
        let mut rng = scenario_stream(seed);
        let s = draw_scenarios(Some(pool), first, &mut rng).unwrap();
        let t = augment_scenarios(&s, target, &mut rng).unwrap();
        prop_assert_eq!(t.len(), target);
        prop_assert_eq!(&t.as_slice()[..first], s.as_slice());
        let idx = indices(&t);
        prop_assert!(idx.iter().all(|&i| i < pool));
        prop_assert_eq!(idx.iter().collect::<HashSet<_>>().len(), idx.len());
    }

    #[test]
    fn noise_seeds_are_distinct(count in 1usize..300, seed in any::<u64>()) {
        let s = draw_scenarios(None, count, &mut scenario_stream(seed)).unwrap();
        prop_assert_eq!(s.as_slice().iter().collect::<HashSet<_>>().len(), count);
    }
}

#[test]
fn draws_beyond_the_pool_fail() {
    assert!(draw_scenarios(Some(5), 6, &mut scenario_stream(0)).is_err());
    let s = draw_scenarios(Some(5), 5, &mut scenario_stream(0)).unwrap();
    assert!(augment_scenarios(&s, 6, &mut scenario_stream(1)).is_err());
}

#[test]
fn zero_gradient_is_reported() {
    assert_eq!(required_sample_size(1.0, 0.9, 0.0, 10).unwrap_err().code(), "zero_gradient");
    assert_eq!(norm_test(1.0, 4, 0.9, 0.0, 10).unwrap_err().code(), "zero_gradient");
}

/// Sample variance against a two-pass computation written out here.
#[test]
fn sample_variance_matches_two_pass() {
    let problem = QuadraticProblem::new(QuadraticSpec::isotropic(4, 0.7)).unwrap();
    let t = generate_directions(Method::Gs, 4, 3, &mut stream(9, 1)).unwrap();
    let scen: Vec<_> = (0..50).map(Scenario::NoiseSeed).collect();
    let est = estimate_gradient(&problem, &[0.5, -0.5, 1.0, 0.0], &scen, &t, 1e-3, &mut EvaluationLedger::new()).unwrap();
    let g = est.per_scenario();
    let mut total = 0.0;
    for i in 0..4 {
        let mean = g.iter().map(|v| v[i]).sum::<f64>() / 50.0;
        total += g.iter().map(|v| (v[i] - mean).powi(2)).sum::<f64>();
    }
    let var = sample_variance(&est).unwrap();
    assert!((var - total / 49.0).abs() < 1e-12 * var);
}

/// With `|grad F|` large relative to the noise the sampled test conditions hold.
#[test]
fn conditions_hold_far_from_the_optimum() {
    let problem = QuadraticProblem::new(QuadraticSpec::isotropic(3, 0.05)).unwrap();
    let x = [3.0, -2.0, 1.0];
    for c in [Condition::C1, Condition::C2, Condition::C3] {
        let r = condition_oracle(&problem, &x, Method::Fd, 3, 1e-4, 0.9, 8, c, 2000, 1).unwrap();
        assert!(r.holds, "{c:?}: {r:?}");
        assert!(r.lhs_stderr >= 0.0 && r.rhs_stderr >= 0.0);
    }
}
