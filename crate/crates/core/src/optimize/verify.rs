//! Structural checks run against a scenario.
//!
//! Each record states whether the scenario meets the hypotheses of a
//! structural property and, if so, whether the solvers bear out its
//! conclusion. A record with hypotheses met and conclusion `Some(false)` is
//! a verification failure.

use serde::{Deserialize, Serialize};

use super::{
    crime_parity_epsilon, error_parity_condition, max_disincentives, reflect_threshold, solve_fair,
    solve_unconstrained, FairSolution,
};
use crate::error::{Error, Result};
use crate::inspection::{first_best, intensity_extremality_check, second_best, Curvature};
use crate::policy::{group_metrics, FairnessNotion, ThresholdPolicy};
use crate::population::{fosd_check, Scenario};

pub const RATE_TOL: f64 = 1e-9;
pub const CRIME_TOL: f64 = 1e-9;
/// Tolerance for crime comparisons whose two sides come from separate searches.
pub const SEARCH_CRIME_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyRecord {
    pub name: String,
    pub hypotheses_hold: bool,
    /// `None` when the hypotheses fail or the conclusion cannot be evaluated.
    pub conclusion: Option<bool>,
    pub witnesses: Vec<(String, f64)>,
    pub note: Option<String>,
}

impl PropertyRecord {
    fn not_applicable(name: &str, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            hypotheses_hold: false,
            conclusion: None,
            witnesses: Vec::new(),
            note: Some(note.into()),
        }
    }

    fn checked(name: &str, ok: bool, witnesses: Vec<(String, f64)>) -> Self {
        Self {
            name: name.into(),
            hypotheses_hold: true,
            conclusion: Some(ok),
            witnesses,
            note: None,
        }
    }

    fn errored(name: &str, err: &Error) -> Self {
        Self {
            name: name.into(),
            hypotheses_hold: true,
            conclusion: Some(false),
            witnesses: Vec::new(),
            note: Some(format!("solver error: {err}")),
        }
    }

    pub fn failed(&self) -> bool {
        self.hypotheses_hold && self.conclusion == Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub records: Vec<PropertyRecord>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        !self.records.iter().any(PropertyRecord::failed)
    }

    pub fn record(&self, name: &str) -> Option<&PropertyRecord> {
        self.records.iter().find(|r| r.name == name)
    }
}

pub const IDENTICAL_SIGNALS: &str = "identical_signals_optimum_equalizes_error_rates";
pub const EQUAL_MAX_DISINCENTIVE: &str = "equal_max_disincentive_optimum_equalizes_delta";
pub const ERROR_PARITY_CONDITION: &str = "error_parity_condition_predicts_ordering";
pub const LOCATION_SCALE_ORDERING: &str = "location_scale_error_parity_beats_delta";
pub const SYMMETRIC_FPR_FNR: &str = "symmetric_base_fpr_fnr_same_crime";
pub const CRIME_PARITY_MARGIN: &str = "crime_parity_margin_decides_cr_vs_delta";
pub const ALIGNED_CRIME_RATES: &str = "aligned_outside_options_optimum_equalizes_crime";
pub const INSPECTION_THRESHOLDS: &str = "inspection_first_and_second_best_thresholds_coincide";
pub const INSPECTION_EXTREMALITY: &str = "inspection_equilibrium_is_extremal";

fn w(name: &str, v: f64) -> (String, f64) {
    (name.to_string(), v)
}

type Fair<'a> = dyn Fn(FairnessNotion) -> Result<FairSolution> + 'a;

fn identical_signals(s: &Scenario, opt: &FairSolution, fair: &Fair<'_>) -> PropertyRecord {
    if !s.identical_signals() {
        return PropertyRecord::not_applicable(IDENTICAL_SIGNALS, "signal structures differ");
    }
    let [m1, m2] = group_metrics(s, &opt.policy);
    let mut witnesses = vec![w("fpr_gap", (m1.fpr - m2.fpr).abs()), w("fnr_gap", (m1.fnr - m2.fnr).abs())];
    let mut ok = witnesses.iter().all(|(_, v)| *v <= RATE_TOL);
    for n in [FairnessNotion::Fpr, FairnessNotion::Fnr, FairnessNotion::Delta] {
        match fair(n) {
            Ok(sol) => {
                let gap = (sol.crime - opt.crime).abs();
                ok &= gap <= CRIME_TOL;
                witnesses.push(w(&format!("{n}_crime_gap"), gap));
            }
            Err(e) => return PropertyRecord::errored(IDENTICAL_SIGNALS, &e),
        }
    }
    PropertyRecord::checked(IDENTICAL_SIGNALS, ok, witnesses)
}

fn equal_max_disincentive(s: &Scenario, d: [f64; 2], opt: &FairSolution, fair: &Fair<'_>) -> PropertyRecord {
    if (d[0] - d[1]).abs() > RATE_TOL {
        return PropertyRecord::not_applicable(EQUAL_MAX_DISINCENTIVE, "maximal disincentives differ");
    }
    let [m1, m2] = group_metrics(s, &opt.policy);
    let delta_gap = (m1.delta - m2.delta).abs();
    match fair(FairnessNotion::Delta) {
        Ok(sol) => {
            let crime_gap = (sol.crime - opt.crime).abs();
            PropertyRecord::checked(
                EQUAL_MAX_DISINCENTIVE,
                delta_gap <= RATE_TOL && crime_gap <= CRIME_TOL,
                vec![w("delta_gap", delta_gap), w("delta_crime_gap", crime_gap), w("fpr_gap", (m1.fpr - m2.fpr).abs())],
            )
        }
        Err(e) => PropertyRecord::errored(EQUAL_MAX_DISINCENTIVE, &e),
    }
}

fn error_parity(s: &Scenario, fair: &Fair<'_>) -> PropertyRecord {
    let cond = match error_parity_condition(s) {
        Ok(c) => c,
        Err(e) => return PropertyRecord::not_applicable(ERROR_PARITY_CONDITION, e.to_string()),
    };
    let crimes = [FairnessNotion::Fpr, FairnessNotion::Fnr, FairnessNotion::Delta].map(fair);
    let [Ok(fpr), Ok(fnr), Ok(delta)] = &crimes else {
        let e = crimes.iter().find_map(|c| c.as_ref().err()).cloned();
        return PropertyRecord::errored(ERROR_PARITY_CONDITION, &e.expect("one solve failed"));
    };
    // inside the band either ordering is consistent with the condition
    let agrees = |c: f64| {
        if cond {
            c <= delta.crime + SEARCH_CRIME_TOL
        } else {
            c >= delta.crime - SEARCH_CRIME_TOL
        }
    };
    PropertyRecord::checked(
        ERROR_PARITY_CONDITION,
        agrees(fpr.crime) && agrees(fnr.crime),
        vec![
            w("condition", if cond { 1.0 } else { 0.0 }),
            w("fpr_minus_delta_crime", fpr.crime - delta.crime),
            w("fnr_minus_delta_crime", fnr.crime - delta.crime),
        ],
    )
}

fn location_scale(s: &Scenario, opt: &FairSolution, fair: &Fair<'_>) -> PropertyRecord {
    let [s1, s2] = s.signals();
    if s1.base != s2.base {
        return PropertyRecord::not_applicable(LOCATION_SCALE_ORDERING, "base families differ");
    }
    let (r1, r2) = (s1.separation(), s2.separation());
    if (r1 - r2).abs() <= 1e-12 * r1.max(r2) {
        let [m1, m2] = group_metrics(s, &opt.policy);
        let gaps = [
            w("delta_gap", (m1.delta - m2.delta).abs()),
            w("fpr_gap", (m1.fpr - m2.fpr).abs()),
            w("fnr_gap", (m1.fnr - m2.fnr).abs()),
        ];
        let ok = gaps.iter().all(|(_, v)| *v <= RATE_TOL);
        return PropertyRecord::checked(LOCATION_SCALE_ORDERING, ok, gaps.to_vec());
    }
    let crimes = [FairnessNotion::Fpr, FairnessNotion::Fnr, FairnessNotion::Delta].map(fair);
    let [Ok(fpr), Ok(fnr), Ok(delta)] = &crimes else {
        let e = crimes.iter().find_map(|c| c.as_ref().err()).cloned();
        return PropertyRecord::errored(LOCATION_SCALE_ORDERING, &e.expect("one solve failed"));
    };
    let ok = fpr.crime < delta.crime - CRIME_TOL
        && fnr.crime < delta.crime - CRIME_TOL
        && [fpr, fnr, delta].iter().all(|x| x.crime > opt.crime + CRIME_TOL);
    PropertyRecord::checked(
        LOCATION_SCALE_ORDERING,
        ok,
        vec![
            w("opt_crime", opt.crime),
            w("fpr_crime", fpr.crime),
            w("fnr_crime", fnr.crime),
            w("delta_crime", delta.crime),
        ],
    )
}

fn symmetric_fpr_fnr(s: &Scenario, fair: &Fair<'_>) -> PropertyRecord {
    let [s1, s2] = s.signals();
    if s1.base != s2.base {
        return PropertyRecord::not_applicable(SYMMETRIC_FPR_FNR, "base families differ");
    }
    if s1.base.symmetry_center().is_none() {
        return PropertyRecord::not_applicable(SYMMETRIC_FPR_FNR, "base density is not symmetric");
    }
    let (fpr, fnr) = match (fair(FairnessNotion::Fpr), fair(FairnessNotion::Fnr)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return PropertyRecord::errored(SYMMETRIC_FPR_FNR, &e),
    };
    let sig = s.signals();
    let reflected = ThresholdPolicy {
        thresholds: [0, 1].map(|g| reflect_threshold(sig[g], fpr.policy.thresholds[g]).expect("symmetric")),
    };
    let before = group_metrics(s, &fpr.policy);
    let after = group_metrics(s, &reflected);
    let fnr_gap = (after[0].fnr - after[1].fnr).abs();
    let delta_shift = (0..2)
        .map(|g| (after[g].delta - before[g].delta).abs())
        .fold(0.0, f64::max);
    let crime_gap = (fpr.crime - fnr.crime).abs();
    PropertyRecord::checked(
        SYMMETRIC_FPR_FNR,
        crime_gap <= SEARCH_CRIME_TOL && fnr_gap <= RATE_TOL && delta_shift <= RATE_TOL,
        vec![
            w("crime_gap", crime_gap),
            w("reflected_fnr_gap", fnr_gap),
            w("reflected_delta_shift", delta_shift),
        ],
    )
}

fn crime_parity(s: &Scenario, d: [f64; 2], fair: &Fair<'_>) -> PropertyRecord {
    let eps = match crime_parity_epsilon(s) {
        Ok(e) => e,
        Err(e) => return PropertyRecord::not_applicable(CRIME_PARITY_MARGIN, e.to_string()),
    };
    // an unreachable common crime rate loses to any feasible policy
    let crime_or_inf = |n| match fair(n) {
        Ok(sol) => Ok(sol.crime),
        Err(Error::Infeasible { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    };
    let (cr, delta) = match (crime_or_inf(FairnessNotion::CrimeRate), crime_or_inf(FairnessNotion::Delta)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return PropertyRecord::errored(CRIME_PARITY_MARGIN, &e),
    };
    let margin = d[1] - d[0] - eps;
    let advantage = delta - cr;
    let ok = if margin > RATE_TOL {
        advantage > -SEARCH_CRIME_TOL
    } else if margin < -RATE_TOL {
        advantage < SEARCH_CRIME_TOL
    } else {
        true
    };
    PropertyRecord::checked(
        CRIME_PARITY_MARGIN,
        ok,
        vec![w("epsilon", eps), w("margin", margin), w("delta_minus_cr_crime", advantage)],
    )
}

fn aligned_crime_rates(s: &Scenario, d: [f64; 2], opt: &FairSolution, fair: &Fair<'_>) -> PropertyRecord {
    let [h1, h2] = s.survivors();
    if !fosd_check(h1, h2, 2001) {
        return PropertyRecord::not_applicable(ALIGNED_CRIME_RATES, "group 2 is not the riskier group");
    }
    let levels = [h1.crime_rate(d[0]), h2.crime_rate(d[1])];
    if (levels[0] - levels[1]).abs() > RATE_TOL {
        return PropertyRecord::not_applicable(
            ALIGNED_CRIME_RATES,
            "crime rates at the maximal disincentives differ",
        );
    }
    let [m1, m2] = group_metrics(s, &opt.policy);
    let cr_gap = (m1.crime_rate - m2.crime_rate).abs();
    match fair(FairnessNotion::CrimeRate) {
        Ok(sol) => {
            let crime_gap = (sol.crime - opt.crime).abs();
            PropertyRecord::checked(
                ALIGNED_CRIME_RATES,
                cr_gap <= RATE_TOL && crime_gap <= CRIME_TOL,
                vec![
                    w("crime_rate_gap", cr_gap),
                    w("cr_crime_gap", crime_gap),
                    w("fpr_gap", (m1.fpr - m2.fpr).abs()),
                ],
            )
        }
        Err(e) => PropertyRecord::errored(ALIGNED_CRIME_RATES, &e),
    }
}

fn inspection_thresholds(s: &Scenario) -> PropertyRecord {
    let fb = match first_best(s) {
        Ok(x) => x,
        Err(e) => return PropertyRecord::errored(INSPECTION_THRESHOLDS, &e),
    };
    let sb = match second_best(s) {
        Ok(x) => x,
        Err(e @ Error::NonInteriorEquilibrium(_)) => {
            return PropertyRecord::not_applicable(INSPECTION_THRESHOLDS, e.to_string())
        }
        Err(e) => return PropertyRecord::errored(INSPECTION_THRESHOLDS, &e),
    };
    let t_gap = (0..2)
        .map(|g| (fb.policy.thresholds[g] - sb.policy.thresholds[g]).abs())
        .fold(0.0, f64::max);
    let mut witnesses = vec![w("threshold_gap", t_gap), w("first_best_crime", fb.crime), w("second_best_crime", sb.crime)];
    let mut ok = t_gap <= 1e-10 && fb.crime <= sb.crime + CRIME_TOL;
    if s.identical_signals() {
        for (label, sol) in [("first", &fb), ("second", &sb)] {
            let [a, b] = sol.conditional_metrics;
            let ctpr = (a.ctpr - b.ctpr).abs();
            let cfpr = (a.cfpr - b.cfpr).abs();
            ok &= ctpr <= RATE_TOL && cfpr <= RATE_TOL;
            witnesses.push(w(&format!("{label}_best_ctpr_gap"), ctpr));
            witnesses.push(w(&format!("{label}_best_cfpr_gap"), cfpr));
        }
    }
    PropertyRecord::checked(INSPECTION_THRESHOLDS, ok, witnesses)
}

fn inspection_extremality(s: &Scenario) -> PropertyRecord {
    match intensity_extremality_check(s) {
        Ok(r) => PropertyRecord {
            name: INSPECTION_EXTREMALITY.into(),
            hypotheses_hold: true,
            conclusion: Some(r.verified),
            witnesses: vec![
                w("equilibrium_crime", r.equilibrium_crime),
                w("grid_min", r.grid_min),
                w("grid_max", r.grid_max),
                w("grid_tolerance", r.grid_tolerance),
                w("local_second_derivative", r.local_second_derivative),
            ],
            note: Some(
                match r.curvature {
                    Curvature::Convex => "convex outside option: equilibrium should minimize crime",
                    Curvature::Concave => "concave outside option: equilibrium should maximize crime",
                    Curvature::Linear => "linear outside option: crime constant along the constraint",
                }
                .into(),
            ),
        },
        Err(e @ (Error::Hypothesis(_) | Error::NonInteriorEquilibrium(_))) => {
            PropertyRecord::not_applicable(INSPECTION_EXTREMALITY, e.to_string())
        }
        Err(e) => PropertyRecord::errored(INSPECTION_EXTREMALITY, &e),
    }
}

/// Runs every applicable structural check on `scenario`.
pub fn verify_properties(scenario: &Scenario) -> Result<VerificationReport> {
    let opt = solve_unconstrained(scenario)?;
    let d = max_disincentives(scenario)?;
    let cache: [std::cell::OnceCell<Result<FairSolution>>; 5] = Default::default();
    let fair = |n: FairnessNotion| {
        let idx = FairnessNotion::ALL.iter().position(|&x| x == n).expect("listed");
        cache[idx].get_or_init(|| solve_fair(scenario, n)).clone()
    };
    let mut records = vec![
        identical_signals(scenario, &opt, &fair),
        equal_max_disincentive(scenario, d, &opt, &fair),
        error_parity(scenario, &fair),
        location_scale(scenario, &opt, &fair),
        symmetric_fpr_fnr(scenario, &fair),
        crime_parity(scenario, d, &fair),
        aligned_crime_rates(scenario, d, &opt, &fair),
    ];
    if scenario.inspection_capacity.is_some() {
        records.push(inspection_thresholds(scenario));
        records.push(inspection_extremality(scenario));
    }
    Ok(VerificationReport { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    fn applicable(r: &VerificationReport) -> Vec<&str> {
        r.records
            .iter()
            .filter(|x| x.hypotheses_hold)
            .map(|x| x.name.as_str())
            .collect()
    }

    #[test]
    fn scenario_a_report() {
        let r = verify_properties(&scenarios::scenario_a()).unwrap();
        assert!(r.passed(), "{r:#?}");
        let names = applicable(&r);
        assert!(names.contains(&IDENTICAL_SIGNALS));
        assert!(names.contains(&EQUAL_MAX_DISINCENTIVE));
    }

    #[test]
    fn scenario_b_report() {
        let r = verify_properties(&scenarios::scenario_b()).unwrap();
        assert!(r.passed(), "{r:#?}");
        let names = applicable(&r);
        for n in [ERROR_PARITY_CONDITION, LOCATION_SCALE_ORDERING, SYMMETRIC_FPR_FNR] {
            assert!(names.contains(&n), "{n} not applicable");
        }
    }

    #[test]
    fn scenario_e_report() {
        let r = verify_properties(&scenarios::scenario_e()).unwrap();
        assert!(r.passed(), "{r:#?}");
        assert!(applicable(&r).contains(&ALIGNED_CRIME_RATES));
    }

    #[test]
    fn capacity_scenarios() {
        let d = verify_properties(&scenarios::scenario_d()).unwrap();
        assert!(d.passed());
        assert!(!d.record(INSPECTION_THRESHOLDS).unwrap().hypotheses_hold);
        for p in [2.0, 0.5, 1.0] {
            let r = verify_properties(&scenarios::power_pair(p)).unwrap();
            assert!(r.passed(), "{r:#?}");
            assert!(r.record(INSPECTION_EXTREMALITY).unwrap().hypotheses_hold);
            assert!(r.record(INSPECTION_THRESHOLDS).unwrap().hypotheses_hold);
        }
    }
}
