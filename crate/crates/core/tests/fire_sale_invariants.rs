use debtstress::contagion::*;
use debtstress::fire_sales::*;
use debtstress::synth::{random_leverage, LeverageRanges};
use proptest::prelude::*;

proptest! {
    #[test]
    fn feasible_sale_restores_initial_leverage(
        le in 1.0f64..30.0,
        lb in 0.0f64..5.0,
        r_frac in 0.0f64..0.9,
        loss_frac in 0.0f64..1.0,
    ) {
        let r = r_frac / le;
        let h1 = le * r;
        let h2 = h1 + loss_frac * (1.0 - h1) * 0.5;
        prop_assume!(h2 > 0.0);
        let l0 = le + lb;
        let s = raw_sale_fraction(le, lb, h2, r);
        prop_assume!(s < 1.0);
        prop_assert!(s > 0.0);
        let after = leverage_after_sale(le, lb, h1, h2, r, s);
        prop_assert!((after - l0).abs() <= 1e-10 * l0.max(1.0));
        let before = ((1.0 - r) * le + lb - (h2 - h1)) / (1.0 - h2);
        prop_assert!(before > l0);
    }

    #[test]
    fn third_round_is_monotone_and_bounded(n in 2usize..20, seed: u64, frac in 0.01f64..0.99, eta in 0.0f64..1.0) {
        let lev = random_leverage(n, seed, &LeverageRanges::default()).unwrap();
        let r = frac / lev.total_external().iter().cloned().fold(0.0, f64::max);
        let state = propagate(first_round(&lev, &ShockVector::common(r).unwrap()).unwrap(), &lev, DistressFunction::Identity);
        let q: Vec<f64> = (0..n).map(|i| lev.total_external()[i] * lev.equities()[i]).collect();
        let out = third_round(&lev, &state, FireSalesParams::new(eta, r).unwrap(), &q).unwrap();
        for i in 0..n {
            prop_assert!(out.h_final[i] >= state.last()[i]);
            prop_assert!(out.h_final[i] <= 1.0);
            prop_assert!((0.0..=1.0).contains(&out.sale_fractions[i]));
        }
        prop_assert!((out.decomposition.total() - out.global_final).abs() <= 1e-12);
        prop_assert!(out.final_price <= 1.0 - r + 1e-15);
    }
}

#[test]
fn no_price_impact_means_no_third_round_loss() {
    let lev = random_leverage(10, 9, &LeverageRanges::default()).unwrap();
    let r = 0.5 / lev.total_external().iter().cloned().fold(0.0, f64::max);
    let state = propagate(
        first_round(&lev, &ShockVector::common(r).unwrap()).unwrap(),
        &lev,
        DistressFunction::Identity,
    );
    let q = vec![1.0; 10];
    let out = third_round(&lev, &state, FireSalesParams::new(0.0, r).unwrap(), &q).unwrap();
    assert_eq!(out.decomposition.third, 0.0);
    assert_eq!(out.h_final, state.last());
}
