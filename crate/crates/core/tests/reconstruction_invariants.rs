use debtstress::reconstruction::*;
use debtstress::synth::{synthesize_cohort, SynthParams};
use debtstress::{derive_leverage, BankRecord, Cohort};
use proptest::prelude::*;

#[test]
fn each_pair_gets_one_fair_direction() {
    let rebalanced = rebalance(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
    let fitness = compute_fitness(&rebalanced.lending, &rebalanced.borrowing);
    let model = ReconstructionModel::with_z(fitness, 1e300, 0.5, rebalanced);
    let draws = 10_000;
    let mut forward = 0;
    for seed in 0..draws {
        let adj = sample_adjacency(&model, seed);
        assert_eq!(adj.link_count(), 1);
        if adj.contains(0, 1) {
            forward += 1;
        }
    }
    let sd = (draws as f64 * 0.25).sqrt();
    assert!(
        (forward as f64 - draws as f64 / 2.0).abs() < 3.0 * sd,
        "{forward}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn calibrated_z_hits_the_target(n in 20usize..120, seed: u64, density in 0.02f64..0.2) {
        let cohort = synthesize_cohort(n, seed, &SynthParams::default()).unwrap();
        let model = ReconstructionModel::calibrate(&cohort, density).unwrap();
        let rel = (model.expected_links() - model.target_links).abs() / model.target_links;
        prop_assert!(rel < CALIBRATION_TOLERANCE);
    }

    #[test]
    fn converged_members_match_margins(seed: u64) {
        let cohort = synthesize_cohort(40, seed, &SynthParams::default()).unwrap();
        let e = generate_ensemble(&cohort, EnsembleSettings::new(0.2, 3, seed)).unwrap();
        let reb = &e.model.rebalanced;
        for (m, d) in e.members.iter().zip(&e.diagnostics) {
            prop_assert!(m.as_slice().iter().all(|&v| v >= 0.0));
            for i in 0..40 {
                prop_assert_eq!(m.get(i, i), 0.0);
            }
            if d.fit.converged {
                for (i, s) in m.row_sums().iter().enumerate() {
                    prop_assert!((s / reb.total_volume - reb.lending[i]).abs() < 0.01);
                }
                for (j, s) in m.col_sums().iter().enumerate() {
                    prop_assert!((s / reb.total_volume - reb.borrowing[j]).abs() < 0.01);
                }
            }
        }
    }

    #[test]
    fn leverage_round_trips_to_exposures(seed: u64) {
        let cohort = synthesize_cohort(25, seed, &SynthParams::default()).unwrap();
        let e = generate_ensemble(&cohort, EnsembleSettings::new(0.25, 1, seed)).unwrap();
        let lev = derive_leverage(&cohort, &e.members[0]).unwrap();
        let back = lev.exposures();
        for (a, b) in back.as_slice().iter().zip(e.members[0].as_slice()) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
        for (i, bank) in cohort.banks().iter().enumerate() {
            prop_assert!((lev.total_external()[i] * bank.equity - bank.external_assets).abs() <= 1e-9 * bank.external_assets);
        }
    }
}

#[test]
fn ensemble_is_reproducible_and_seed_sensitive() {
    let cohort = synthesize_cohort(30, 2, &SynthParams::default()).unwrap();
    let a = generate_ensemble(&cohort, EnsembleSettings::new(0.15, 5, 1)).unwrap();
    let b = generate_ensemble(&cohort, EnsembleSettings::new(0.15, 5, 1)).unwrap();
    let c = generate_ensemble(&cohort, EnsembleSettings::new(0.15, 5, 2)).unwrap();
    assert_eq!(a.members, b.members);
    assert_ne!(a.members, c.members);
}

#[test]
fn lender_without_borrowers_cannot_be_reconstructed() {
    let cohort = Cohort::new(vec![
        BankRecord::from_aggregates("A", "a", 2011, 10.0, 100.0, 20.0, 0.0),
        BankRecord::from_aggregates("B", "b", 2011, 10.0, 100.0, 20.0, 0.0),
        BankRecord::from_aggregates("C", "c", 2011, 10.0, 100.0, 0.0, 0.0),
    ]);
    // no bank borrows: there is no interbank market to rebuild
    if let Ok(cohort) = cohort {
        assert!(generate_ensemble(&cohort, EnsembleSettings::new(0.3, 1, 1)).is_err());
    }
}
