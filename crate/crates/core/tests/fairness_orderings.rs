mod common;

use common::{bisect, normal_survivor};
use crimefair::optimize::{
    compare_notions, crime_equalization_epsilon, crime_parity_epsilon, error_parity_condition, reflect_threshold,
    solve_fair, solve_unconstrained,
};
use crimefair::optimize::verify::verify_properties;
use crimefair::policy::group_metrics;
use crimefair::scenarios;
use crimefair::{Error, FairnessNotion, SurvivorFunction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn scenario_b_orders_the_notions() {
    let b = scenarios::scenario_b();
    let cmp = compare_notions(&b).unwrap();
    let opt = cmp.unconstrained.crime;
    let fpr = cmp.crime_of(FairnessNotion::Fpr).unwrap();
    let fnr = cmp.crime_of(FairnessNotion::Fnr).unwrap();
    let delta = cmp.crime_of(FairnessNotion::Delta).unwrap();
    assert!(fpr - opt > 1e-6);
    assert!((fpr - fnr).abs() <= 1e-8);
    assert!(delta - fpr > 1e-6);
    assert_eq!(cmp.error_parity_condition, Some(true));
}

#[test]
fn mirror_pair_equalizes_delta_but_not_fpr() {
    let c = scenarios::scenario_c();
    let opt = solve_unconstrained(&c).unwrap();
    let m = group_metrics(&c, &opt.policy);
    assert!((m[0].delta - m[1].delta).abs() <= 1e-9);
    assert!((m[0].fpr - m[1].fpr).abs() > 0.01);
    let delta = solve_fair(&c, FairnessNotion::Delta).unwrap();
    let fpr = solve_fair(&c, FairnessNotion::Fpr).unwrap();
    assert!((delta.crime - opt.crime).abs() <= 1e-9);
    assert!(fpr.crime - delta.crime > 1e-6);
}

#[test]
fn aligned_outside_options_make_crime_parity_free() {
    let e = scenarios::scenario_e();
    let opt = solve_unconstrained(&e).unwrap();
    let cr = solve_fair(&e, FairnessNotion::CrimeRate).unwrap();
    assert!((cr.crime - opt.crime).abs() <= 1e-9);
    let m = group_metrics(&e, &opt.policy);
    assert!((m[0].fpr - m[1].fpr).abs() > 0.01);
}

#[test]
fn epsilon_matches_independent_bisection() {
    let a = scenarios::scenario_a();
    let eps = crime_parity_epsilon(&a).unwrap();
    let d1 = 2.0 * common::phi(0.5) - 1.0;
    let c1 = normal_survivor(d1, 0.0, 2.0);
    let c2 = normal_survivor(d1, 2.0, 2.0);
    let g = |e: f64| {
        let c = normal_survivor(d1 + e, 2.0, 2.0);
        1000.0 * (c - c1) + 1000.0 * (c - c2)
    };
    let want = bisect(g, 0.0, 10.0);
    assert!((eps - want).abs() <= 1e-8, "{eps} vs {want}");
}

#[test]
fn epsilon_with_an_empty_first_group_solves_the_second_alone() {
    let h1 = SurvivorFunction::normal(0.0, 2.0).unwrap();
    let h2 = SurvivorFunction::normal(2.0, 2.0).unwrap();
    // only group 2's own term remains, so no shift is needed
    assert_eq!(crime_equalization_epsilon(&h1, &h2, 0.0, 1000.0, 0.4).unwrap(), 0.0);
    assert!(matches!(
        crime_equalization_epsilon(&h2, &h1, 1000.0, 1000.0, 0.4),
        Err(Error::Hypothesis(_))
    ));
}

#[test]
fn reflection_swaps_fpr_and_fnr_solutions() {
    let b = scenarios::scenario_b();
    let fpr = solve_fair(&b, FairnessNotion::Fpr).unwrap();
    let fnr = solve_fair(&b, FairnessNotion::Fnr).unwrap();
    assert!((fpr.crime - fnr.crime).abs() <= 1e-8);
    for g in 0..2 {
        let sig = &b.groups[g].signal;
        let r = reflect_threshold(sig, fpr.policy.thresholds[g]).unwrap();
        let m_fpr = sig.fpr(fpr.policy.thresholds[g]);
        let m_fnr = 1.0 - sig.tpr(r);
        assert!((m_fpr - m_fnr).abs() <= 1e-9);
        assert!((sig.delta_of_threshold(r) - sig.delta_of_threshold(fpr.policy.thresholds[g])).abs() <= 1e-9);
    }
}

#[test]
fn condition_matches_orderings_on_random_location_scale_scenarios() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..8 {
        let s = scenarios::random_location_scale(&mut rng);
        let Ok(cond) = error_parity_condition(&s) else { continue };
        let delta = solve_fair(&s, FairnessNotion::Delta).unwrap().crime;
        let fpr = solve_fair(&s, FairnessNotion::Fpr).unwrap().crime;
        let fnr = solve_fair(&s, FairnessNotion::Fnr).unwrap().crime;
        assert_eq!(cond, fpr <= delta + 1e-8 && fnr <= delta + 1e-8, "{s:?}");
    }
}

#[test]
fn canonical_reports_pass() {
    for (name, s) in scenarios::canonical() {
        let report = verify_properties(&s).unwrap();
        assert!(report.passed(), "{name}: {report:?}");
    }
}
