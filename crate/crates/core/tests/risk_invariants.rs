use debtstress::risk::*;
use proptest::prelude::*;

fn losses() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..300)
}

fn alpha() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.9), Just(0.95), Just(0.99), 0.01f64..0.999]
}

proptest! {
    #[test]
    fn cvar_dominates_var(v in losses(), a in alpha()) {
        let var = empirical_var(&v, a).unwrap();
        let cvar = empirical_cvar(&v, a).unwrap();
        prop_assert!(cvar >= var);
        prop_assert!(v.contains(&var));
    }

    #[test]
    fn var_moves_with_a_constant_shift(v in losses(), a in alpha(), c in 0.0f64..0.5) {
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let tol = 1e-12;
        prop_assert!((empirical_var(&shifted, a).unwrap() - empirical_var(&v, a).unwrap() - c).abs() <= tol);
        prop_assert!((empirical_cvar(&shifted, a).unwrap() - empirical_cvar(&v, a).unwrap() - c).abs() <= tol);
    }

    #[test]
    fn var_is_monotone_in_alpha(v in losses(), a in 0.01f64..0.98, b in 0.0f64..0.01) {
        prop_assert!(empirical_var(&v, a + b).unwrap() >= empirical_var(&v, a).unwrap());
    }

    #[test]
    fn order_does_not_matter(mut v in losses(), a in alpha()) {
        let before = (empirical_var(&v, a).unwrap(), empirical_cvar(&v, a).unwrap());
        v.reverse();
        prop_assert_eq!(before, (empirical_var(&v, a).unwrap(), empirical_cvar(&v, a).unwrap()));
    }

    #[test]
    fn pooled_report_ignores_sample_order(seed in 0u64..1000, n in 2usize..40) {
        let samples: Vec<LossSample> = (0..n).map(|k| {
            let x = ((k as u64 * 2654435761 + seed) % 1000) as f64 / 1000.0;
            LossSample { network: k % 5, scenario: k / 5, shock: 0.01, h: vec![vec![x * 0.5, x], vec![x, x]], global: vec![x * 0.75, x] }
        }).collect();
        let mut rev = samples.clone();
        rev.reverse();
        let a = aggregate_ensemble(&samples, 0.95, QuantileConvention::UpperTail).unwrap();
        let b = aggregate_ensemble(&rev, 0.95, QuantileConvention::UpperTail).unwrap();
        prop_assert_eq!(a, b);
    }
}
