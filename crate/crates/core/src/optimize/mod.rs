//! Crime-minimizing policies, with and without a fairness constraint.
//!
//! Every constrained problem is reduced to a one-dimensional search over
//! group 1's threshold: for each candidate `t1` the constraint pins down the
//! companion threshold of group 2, and the objective is evaluated on the
//! resulting pair. Crime-rate parity is also solved in closed form.

pub mod verify;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;
use crate::policy::{group_metrics, metrics_for, total_crime, FairnessNotion, ThresholdPolicy};
use crate::population::{fosd_check, Scenario, SurvivorFunction};
use crate::signal::{DisincentiveBounds, Hypothesis, SignalStructure};

/// Grid points of the outer search over group 1's threshold.
pub const OUTER_GRID: usize = 256;
/// Cells of the sign-change scan used by the PPV companion.
pub const PPV_SCAN_CELLS: usize = 512;
const OUTER_TOL: f64 = 1e-11;
const DELTA_TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairSolution {
    pub policy: ThresholdPolicy,
    pub crime: f64,
    /// `None` for the unconstrained optimum.
    pub notion: Option<FairnessNotion>,
    /// `|stat_1 − stat_2|` at the returned policy.
    pub residual: f64,
    /// Set when the PPV companion had several roots at the solution.
    pub multiple_roots: bool,
}

/// Outcome of one notion in a [`NotionComparison`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NotionOutcome {
    pub notion: FairnessNotion,
    pub solution: Option<FairSolution>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NotionComparison {
    pub unconstrained: FairSolution,
    pub notions: Vec<NotionOutcome>,
    /// Whether error-rate parity beats disincentive parity; absent when the
    /// maximal disincentives coincide.
    pub error_parity_condition: Option<bool>,
    /// How far `Δ̄_2` must exceed `Δ̄_1` for crime-rate parity to beat
    /// disincentive parity; absent when group 2 is not the riskier group.
    pub crime_parity_epsilon: Option<f64>,
}

impl NotionComparison {
    pub fn crime_of(&self, notion: FairnessNotion) -> Option<f64> {
        self.notions
            .iter()
            .find(|o| o.notion == notion)
            .and_then(|o| o.solution.map(|s| s.crime))
    }
}

fn bounds_pair(scenario: &Scenario) -> Result<[DisincentiveBounds; 2]> {
    Ok([
        scenario.groups[0].signal.max_disincentive()?,
        scenario.groups[1].signal.max_disincentive()?,
    ])
}

/// Maximal disincentive of each group.
pub fn max_disincentives(scenario: &Scenario) -> Result<[f64; 2]> {
    let b = bounds_pair(scenario)?;
    Ok([b[0].upper, b[1].upper])
}

/// Each group at its own disincentive-maximizing threshold.
pub fn solve_unconstrained(scenario: &Scenario) -> Result<FairSolution> {
    let b = bounds_pair(scenario)?;
    let policy = ThresholdPolicy::new(b[0].argmax_threshold, b[1].argmax_threshold);
    Ok(FairSolution {
        policy,
        crime: total_crime(scenario, &policy),
        notion: None,
        residual: 0.0,
        multiple_roots: false,
    })
}

/// `to`'s threshold at which its `hyp`-conditional cdf equals `from`'s at `t`,
/// computed through whichever tail keeps precision.
fn match_conditional(from: &SignalStructure, to: &SignalStructure, t: f64, hyp: Hypothesis) -> Result<f64> {
    let p = from.cdf(t, hyp);
    let out = if p <= 0.5 {
        to.quantile(p, hyp)
    } else {
        to.isf(from.sf(t, hyp), hyp)
    };
    out.map_err(|e| match e {
        Error::Domain(reason) => Error::infeasible("threshold match", reason),
        other => other,
    })
}

/// Group-2 threshold(s) satisfying a constraint for a given group-1 threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Companion {
    pub threshold: f64,
    pub multiple_roots: bool,
}

/// Largest `Δ ∈ (0, upper]` with `H(Δ) = c`, if any.
fn disincentive_for_crime_level(h: &SurvivorFunction, c: f64, upper: f64) -> Option<f64> {
    let (lo, hi) = h.preimage(c).ok()?;
    let lo = lo.max(0.0);
    let hi = hi.min(upper);
    if hi > 0.0 && lo <= hi {
        Some(hi)
    } else if lo > upper && lo - upper <= 1e-12 {
        Some(upper)
    } else {
        None
    }
}

fn companion_ppv(scenario: &Scenario, target: f64) -> Result<Companion> {
    let sig = &scenario.groups[1].signal;
    let (lo, hi) = sig.threshold_span(0.0005, 0.9995)?;
    let gap = |t: f64| match metrics_for(scenario, 1, t).ppv {
        Some(v) => v - target,
        None => f64::NAN,
    };
    let grid = numeric::linspace(lo.min(hi), lo.max(hi), PPV_SCAN_CELLS + 1);
    let values: Vec<f64> = grid.iter().map(|&t| gap(t)).collect();
    let mut roots = Vec::new();
    for i in 0..PPV_SCAN_CELLS {
        let (a, b) = (values[i], values[i + 1]);
        if a == 0.0 {
            roots.push(grid[i]);
        } else if a.is_finite() && b.is_finite() && a.signum() != b.signum() && b != 0.0 {
            roots.push(numeric::bisect(gap, grid[i], grid[i + 1])?);
        }
    }
    if values[PPV_SCAN_CELLS] == 0.0 {
        roots.push(grid[PPV_SCAN_CELLS]);
    }
    let crime2 = |t: f64| metrics_for(scenario, 1, t).crime_rate;
    let best = roots
        .iter()
        .copied()
        .min_by(|a, b| crime2(*a).total_cmp(&crime2(*b)))
        .ok_or_else(|| {
            Error::infeasible_notion(
                FairnessNotion::Ppv,
                format!("no group-2 threshold reaches PPV {target}"),
            )
        })?;
    let distinct = roots.iter().filter(|&&r| (r - best).abs() > 1e-9).count();
    Ok(Companion {
        threshold: best,
        multiple_roots: distinct > 0,
    })
}

/// Full companion computation, including the PPV multiplicity flag.
pub fn companion(scenario: &Scenario, notion: FairnessNotion, t1: f64) -> Result<Companion> {
    if !t1.is_finite() {
        return Err(Error::Domain(format!("threshold must be finite, got {t1}")));
    }
    let [s1, s2] = scenario.signals();
    let single = |threshold| Companion {
        threshold,
        multiple_roots: false,
    };
    let tag = |e: Error| match e {
        Error::Infeasible { reason, .. } | Error::Domain(reason) => Error::infeasible_notion(notion, reason),
        other => other,
    };
    match notion {
        FairnessNotion::Fpr => match_conditional(s1, s2, t1, Hypothesis::Innocent)
            .map(single)
            .map_err(tag),
        FairnessNotion::Fnr => match_conditional(s1, s2, t1, Hypothesis::Crime)
            .map(single)
            .map_err(tag),
        FairnessNotion::Delta => {
            let target = s1.delta_of_threshold(t1);
            let b2 = s2.max_disincentive()?;
            s2.invert_delta_rising(target, &b2).map(single).map_err(tag)
        }
        FairnessNotion::CrimeRate => {
            let c = metrics_for(scenario, 0, t1).crime_rate;
            let b2 = s2.max_disincentive()?;
            let h2 = &scenario.groups[1].outside_option;
            let d = disincentive_for_crime_level(h2, c, b2.upper).ok_or_else(|| {
                Error::infeasible_notion(
                    notion,
                    format!("crime rate {c} is not reachable by group 2 with Δ in (0, {}]", b2.upper),
                )
            })?;
            s2.invert_delta_rising(d, &b2).map(single).map_err(tag)
        }
        FairnessNotion::Ppv => {
            let target = metrics_for(scenario, 0, t1).ppv.ok_or_else(|| {
                Error::infeasible_notion(notion, format!("PPV of group 1 is undefined at {t1}"))
            })?;
            companion_ppv(scenario, target)
        }
    }
}

/// The group-2 threshold equalizing `notion` with group 1 at `t1`.
pub fn companion_threshold(scenario: &Scenario, notion: FairnessNotion, t1: f64) -> Result<f64> {
    companion(scenario, notion, t1).map(|c| c.threshold)
}

/// `|stat_1 − stat_2|` of `notion` under `policy`; infinite if undefined.
pub fn constraint_residual(scenario: &Scenario, notion: FairnessNotion, policy: &ThresholdPolicy) -> f64 {
    let [m1, m2] = group_metrics(scenario, policy);
    match (m1.statistic(notion), m2.statistic(notion)) {
        (Some(a), Some(b)) => (a - b).abs(),
        _ => f64::INFINITY,
    }
}

fn relabel_needed(scenario: &Scenario) -> Result<bool> {
    let [d1, d2] = max_disincentives(scenario)?;
    Ok(d1 > d2 + DELTA_TIE_TOL)
}

/// Grid-then-golden search over group 1's threshold, without any closed form.
pub fn solve_fair_by_search(scenario: &Scenario, notion: FairnessNotion) -> Result<FairSolution> {
    if relabel_needed(scenario)? {
        let mut sol = search_in_order(&scenario.swapped(), notion)?;
        sol.policy = sol.policy.swapped();
        return Ok(sol);
    }
    search_in_order(scenario, notion)
}

fn search_in_order(scenario: &Scenario, notion: FairnessNotion) -> Result<FairSolution> {
    let s1 = &scenario.groups[0].signal;
    let (lo, hi) = s1.threshold_span(0.0005, 0.9995)?;
    let objective = |t1: f64| match companion(scenario, notion, t1) {
        Ok(c) => total_crime(scenario, &ThresholdPolicy::new(t1, c.threshold)),
        Err(_) => f64::INFINITY,
    };
    let mut best = numeric::grid_then_golden(objective, lo.min(hi), lo.max(hi), OUTER_GRID, OUTER_TOL);
    // group 1 at its own optimum is always worth a look
    let t_star = s1.max_disincentive()?.argmax_threshold;
    let at_star = objective(t_star);
    if at_star.is_finite() && best.is_none_or(|(_, v)| at_star <= v) {
        best = Some((t_star, at_star));
    }
    let (t1, _) = best.ok_or_else(|| {
        Error::infeasible_notion(notion, "no group-1 threshold admits a matching group-2 threshold")
    })?;
    let c = companion(scenario, notion, t1)?;
    let policy = ThresholdPolicy::new(t1, c.threshold);
    Ok(FairSolution {
        policy,
        crime: total_crime(scenario, &policy),
        notion: Some(notion),
        residual: constraint_residual(scenario, notion, &policy),
        multiple_roots: c.multiple_roots,
    })
}

/// Closed-form crime-rate parity: the common level is `max_g H_g(Δ̄_g)`.
pub fn solve_crime_parity(scenario: &Scenario) -> Result<FairSolution> {
    let b = bounds_pair(scenario)?;
    let h = scenario.survivors();
    let levels = [h[0].crime_rate(b[0].upper), h[1].crime_rate(b[1].upper)];
    let lead = if levels[0] >= levels[1] { 0 } else { 1 };
    let other = 1 - lead;
    let c_star = levels[lead];
    let d_other = disincentive_for_crime_level(h[other], c_star, b[other].upper).ok_or_else(|| {
        Error::infeasible_notion(
            FairnessNotion::CrimeRate,
            format!(
                "common crime rate {c_star} exceeds what group {} reaches with positive disincentive",
                other + 1
            ),
        )
    })?;
    let mut thresholds = [0.0; 2];
    thresholds[lead] = b[lead].argmax_threshold;
    thresholds[other] = scenario.groups[other]
        .signal
        .invert_delta_rising(d_other, &b[other])?;
    let policy = ThresholdPolicy { thresholds };
    Ok(FairSolution {
        policy,
        crime: total_crime(scenario, &policy),
        notion: Some(FairnessNotion::CrimeRate),
        residual: constraint_residual(scenario, FairnessNotion::CrimeRate, &policy),
        multiple_roots: false,
    })
}

/// Crime-minimizing policy subject to equalizing `notion` across groups.
pub fn solve_fair(scenario: &Scenario, notion: FairnessNotion) -> Result<FairSolution> {
    match notion {
        FairnessNotion::CrimeRate => solve_crime_parity(scenario),
        _ => solve_fair_by_search(scenario, notion),
    }
}

/// Every notion side by side with the unconstrained optimum.
pub fn compare_notions(scenario: &Scenario) -> Result<NotionComparison> {
    let unconstrained = solve_unconstrained(scenario)?;
    let notions = FairnessNotion::ALL
        .into_iter()
        .map(|notion| match solve_fair(scenario, notion) {
            Ok(s) => NotionOutcome {
                notion,
                solution: Some(s),
                error: None,
            },
            Err(e) => NotionOutcome {
                notion,
                solution: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(NotionComparison {
        unconstrained,
        notions,
        error_parity_condition: error_parity_condition(scenario).ok(),
        crime_parity_epsilon: crime_parity_epsilon(scenario).ok(),
    })
}

/// Does matching error rates at the weaker group's optimum leave the
/// stronger group's crime-conditional threshold at or above its
/// innocent-conditional one? With the groups ordered so that `Δ̄_2 > Δ̄_1`,
/// this compares `F_cc2⁻¹(F_cc1(T*_1))` with `F_nc2⁻¹(F_nc1(T*_1))`; when true,
/// both error-rate parities do at least as well as disincentive parity.
pub fn error_parity_condition(scenario: &Scenario) -> Result<bool> {
    let [d1, d2] = max_disincentives(scenario)?;
    if (d1 - d2).abs() <= DELTA_TIE_TOL {
        return Err(Error::Hypothesis(format!(
            "maximal disincentives coincide ({d1} vs {d2}); the condition needs them to differ"
        )));
    }
    let (weak, strong) = if d1 < d2 { (0, 1) } else { (1, 0) };
    let sw = &scenario.groups[weak].signal;
    let ss = &scenario.groups[strong].signal;
    let t_star = sw.max_disincentive()?.argmax_threshold;
    let via_crime = match_conditional(sw, ss, t_star, Hypothesis::Crime)?;
    let via_innocent = match_conditional(sw, ss, t_star, Hypothesis::Innocent)?;
    Ok(via_crime >= via_innocent)
}

/// Root `ε ≥ 0` of `n1·(H2(Δ1+ε) − H1(Δ1)) + n2·(H2(Δ1+ε) − H2(Δ1)) = 0`.
///
/// Needs `H2 ≥ H1` pointwise at `Δ1`. The left side falls in `ε`; the root
/// is bracketed by 0 and the point where `H2(Δ1+ε) = H1(Δ1)`.
pub fn crime_equalization_epsilon(
    h1: &SurvivorFunction,
    h2: &SurvivorFunction,
    n1: f64,
    n2: f64,
    delta1: f64,
) -> Result<f64> {
    let c1 = h1.crime_rate(delta1);
    let c2 = h2.crime_rate(delta1);
    if c2 < c1 {
        return Err(Error::Hypothesis(format!(
            "group 2 must be at least as crime-prone at Δ = {delta1} ({c2} < {c1})"
        )));
    }
    let g = |eps: f64| {
        let c = h2.crime_rate(delta1 + eps);
        n1 * (c - c1) + n2 * (c - c2)
    };
    if g(0.0) <= 0.0 {
        return Ok(0.0);
    }
    let (lo, _) = h2.preimage(c1).map_err(|e| Error::Solver(format!("cannot bracket ε: {e}")))?;
    let upper = (lo - delta1).max(0.0);
    numeric::bisect(g, 0.0, upper)
}

/// [`crime_equalization_epsilon`] at `Δ̄_1`, for group 2 riskier than group 1.
pub fn crime_parity_epsilon(scenario: &Scenario) -> Result<f64> {
    let [h1, h2] = scenario.survivors();
    if !fosd_check(h1, h2, 2001) {
        return Err(Error::Hypothesis(
            "group 2's outside option must first-order dominate group 1's".into(),
        ));
    }
    let [d1, _] = max_disincentives(scenario)?;
    let [n1, n2] = scenario.populations();
    crime_equalization_epsilon(h1, h2, n1, n2, d1)
}

/// `T' = 2c + m − T`: maps a threshold to the one whose FNR equals the
/// original FPR (and vice versa), for bases symmetric about `c`.
pub fn reflect_threshold(signal: &SignalStructure, t: f64) -> Option<f64> {
    signal
        .symmetry_center()
        .map(|c| 2.0 * c + signal.crime_shift - t)
}
