//! The policing game: limited inspection capacity split across groups.
//!
//! An agent of group `g` inspected with probability `θ_g` faces the
//! effective disincentive `θ_g Δ_g`, so its group offends at rate
//! `H_g(θ_g Δ_g)`. The adjudicator either picks `θ` itself (first best) or
//! anticipates police who chase the higher crime rate until the two rates
//! meet (second best).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;
use crate::optimize::solve_unconstrained;
use crate::policy::ThresholdPolicy;
use crate::population::Scenario;

const FIRST_BEST_GRID: usize = 1024;
const EXTREMALITY_GRID: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InspectionProfile {
    pub intensities: [f64; 2],
}

/// True and false positive rates among inspected agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRates {
    pub ctpr: f64,
    pub cfpr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    pub policy: ThresholdPolicy,
    pub profile: InspectionProfile,
    pub crime: f64,
    pub conditional_metrics: [ConditionalRates; 2],
    pub crime_rates: [f64; 2],
    pub interior: bool,
}

fn capacity(scenario: &Scenario) -> Result<f64> {
    scenario.inspection_capacity.ok_or_else(|| {
        Error::InvalidParameter("the scenario has no inspection capacity".into())
    })
}

/// Feasible range of `θ_1` when capacity binds and both intensities lie in `[0, 1]`.
pub fn theta1_range(scenario: &Scenario) -> Result<(f64, f64)> {
    let s = capacity(scenario)?;
    let [n1, n2] = scenario.populations();
    Ok((((s - n2) / n1).max(0.0), (s / n1).min(1.0)))
}

/// `θ_2` that exhausts capacity given `θ_1`.
pub fn binding_theta2(scenario: &Scenario, theta1: f64) -> Result<f64> {
    let s = capacity(scenario)?;
    let [n1, n2] = scenario.populations();
    Ok(((s - n1 * theta1) / n2).clamp(0.0, 1.0))
}

/// Group crime rates `H_g(θ_g Δ_g)`.
pub fn crime_rates(scenario: &Scenario, profile: &InspectionProfile, deltas: [f64; 2]) -> [f64; 2] {
    let h = scenario.survivors();
    [0, 1].map(|g| h[g].crime_rate(profile.intensities[g] * deltas[g]))
}

/// `Σ_g N_g H_g(θ_g Δ_g)`.
pub fn game_crime(scenario: &Scenario, profile: &InspectionProfile, deltas: [f64; 2]) -> f64 {
    let r = crime_rates(scenario, profile, deltas);
    let [n1, n2] = scenario.populations();
    n1 * r[0] + n2 * r[1]
}

/// Capacity-binding intensities at which both groups offend equally.
///
/// The gap `H_1(θ_1Δ_1) − H_2(θ_2(θ_1)Δ_2)` falls in `θ_1`; it must change
/// sign strictly inside the feasible range, otherwise the police would
/// ignore one group and the error is [`Error::NonInteriorEquilibrium`].
pub fn equilibrium_intensities(scenario: &Scenario, deltas: [f64; 2]) -> Result<InspectionProfile> {
    if !(deltas[0] > 0.0 && deltas[1] > 0.0) {
        return Err(Error::Domain(format!("disincentives must be positive, got {deltas:?}")));
    }
    let (lo, hi) = theta1_range(scenario)?;
    let h = scenario.survivors();
    let gap = |t1: f64| {
        let t2 = binding_theta2(scenario, t1).unwrap_or(f64::NAN);
        h[0].crime_rate(t1 * deltas[0]) - h[1].crime_rate(t2 * deltas[1])
    };
    let (g_lo, g_hi) = (gap(lo), gap(hi));
    if !(g_lo > 0.0 && g_hi < 0.0) {
        let favoured = if g_lo <= 0.0 { 2 } else { 1 };
        return Err(Error::NonInteriorEquilibrium(format!(
            "crime-rate gap keeps one sign on θ_1 ∈ [{lo}, {hi}] (gap {g_lo} to {g_hi}); \
             police would search group {favoured} as much as capacity allows"
        )));
    }
    let t1 = numeric::bisect(gap, lo, hi)?;
    let profile = InspectionProfile {
        intensities: [t1, binding_theta2(scenario, t1)?],
    };
    let [a, b] = profile.intensities;
    if !(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0) {
        return Err(Error::NonInteriorEquilibrium(format!(
            "equalizing intensities {profile:?} sit on the boundary"
        )));
    }
    Ok(profile)
}

fn assemble(scenario: &Scenario, policy: ThresholdPolicy, profile: InspectionProfile) -> GameSolution {
    let sig = scenario.signals();
    let deltas = [0, 1].map(|g| sig[g].delta_of_threshold(policy.thresholds[g]));
    let conditional_metrics = [0, 1].map(|g| ConditionalRates {
        ctpr: sig[g].tpr(policy.thresholds[g]),
        cfpr: sig[g].fpr(policy.thresholds[g]),
    });
    let [a, b] = profile.intensities;
    GameSolution {
        policy,
        profile,
        crime: game_crime(scenario, &profile, deltas),
        conditional_metrics,
        crime_rates: crime_rates(scenario, &profile, deltas),
        interior: a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0,
    }
}

/// Adjudicator picks thresholds and intensities: thresholds at `T*_g`,
/// intensities by grid-then-golden search along the binding constraint.
pub fn first_best(scenario: &Scenario) -> Result<GameSolution> {
    let opt = solve_unconstrained(scenario)?;
    let deltas = maximal_deltas(scenario, &opt.policy);
    let (lo, hi) = theta1_range(scenario)?;
    let objective = |t1: f64| match binding_theta2(scenario, t1) {
        Ok(t2) => game_crime(scenario, &InspectionProfile { intensities: [t1, t2] }, deltas),
        Err(_) => f64::INFINITY,
    };
    let (t1, _) = numeric::grid_then_golden(objective, lo, hi, FIRST_BEST_GRID, 1e-12)
        .ok_or_else(|| Error::Solver("first-best objective is nowhere finite".into()))?;
    let profile = InspectionProfile {
        intensities: [t1, binding_theta2(scenario, t1)?],
    };
    Ok(assemble(scenario, opt.policy, profile))
}

fn maximal_deltas(scenario: &Scenario, policy: &ThresholdPolicy) -> [f64; 2] {
    let sig = scenario.signals();
    [0, 1].map(|g| sig[g].delta_of_threshold(policy.thresholds[g]))
}

/// Police equalize crime rates; the adjudicator still sets `T*_g`.
pub fn second_best(scenario: &Scenario) -> Result<GameSolution> {
    let opt = solve_unconstrained(scenario)?;
    let deltas = maximal_deltas(scenario, &opt.policy);
    let profile = equilibrium_intensities(scenario, deltas)?;
    Ok(assemble(scenario, opt.policy, profile))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curvature {
    Convex,
    Concave,
    Linear,
}

/// Where the equilibrium sits among all capacity-binding profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalityReport {
    pub curvature: Curvature,
    pub equilibrium: InspectionProfile,
    pub equilibrium_crime: f64,
    pub grid_min: f64,
    pub grid_max: f64,
    /// Largest crime change between adjacent grid profiles.
    pub grid_tolerance: f64,
    pub attains_min: bool,
    pub attains_max: bool,
    /// Finite-difference second derivative of crime along the constraint at
    /// the equilibrium.
    pub local_second_derivative: f64,
    /// First derivative at the equilibrium; zero for a shared location family.
    pub local_first_derivative: f64,
    /// Convex: attains the minimum; concave: the maximum; linear: both.
    pub verified: bool,
}

fn curvature_on(scenario: &Scenario, deltas: [f64; 2]) -> Result<Curvature> {
    let h = scenario.survivors();
    let (lo, hi) = theta1_range(scenario)?;
    let mut signs = [false; 3];
    for t1 in numeric::linspace(lo, hi, 201) {
        let t2 = binding_theta2(scenario, t1)?;
        for (g, x) in [(0, t1 * deltas[0]), (1, t2 * deltas[1])] {
            let (a, b) = h[g].decreasing_span();
            if !(x > a && x < b) {
                return Err(Error::Hypothesis(format!(
                    "effective disincentive {x} of group {} leaves the strictly decreasing span ({a}, {b})",
                    g + 1
                )));
            }
            let d2 = h[g].second_derivative(x);
            let idx = if d2 > 1e-12 {
                0
            } else if d2 < -1e-12 {
                1
            } else {
                2
            };
            signs[idx] = true;
        }
    }
    match signs {
        [true, false, _] => Ok(Curvature::Convex),
        [false, true, _] => Ok(Curvature::Concave),
        [false, false, true] => Ok(Curvature::Linear),
        _ => Err(Error::Hypothesis(
            "outside options change curvature over the feasible intensities".into(),
        )),
    }
}

/// Compares the second-best intensities with every capacity-binding profile
/// on a 1000-point grid, given thresholds at `T*_g`.
///
/// Hypotheses: outside options from one location family with a single
/// curvature over the visited effective disincentives, and equal maximal
/// disincentives (so that crime along the constraint is stationary at the
/// equilibrium).
pub fn intensity_extremality_check(scenario: &Scenario) -> Result<ExtremalityReport> {
    let [h1, h2] = scenario.survivors();
    if !h1.same_location_family(h2) {
        return Err(Error::Hypothesis(
            "outside options must differ only by location".into(),
        ));
    }
    let opt = solve_unconstrained(scenario)?;
    let deltas = maximal_deltas(scenario, &opt.policy);
    if (deltas[0] - deltas[1]).abs() > 1e-9 {
        return Err(Error::Hypothesis(format!(
            "maximal disincentives differ ({} vs {})",
            deltas[0], deltas[1]
        )));
    }
    let curvature = curvature_on(scenario, deltas)?;
    let equilibrium = equilibrium_intensities(scenario, deltas)?;
    let along = |t1: f64| {
        let t2 = binding_theta2(scenario, t1).unwrap_or(f64::NAN);
        game_crime(scenario, &InspectionProfile { intensities: [t1, t2] }, deltas)
    };
    let (lo, hi) = theta1_range(scenario)?;
    let values: Vec<f64> = numeric::linspace(lo, hi, EXTREMALITY_GRID)
        .into_iter()
        .map(along)
        .collect();
    let grid_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let grid_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid_tolerance = values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    let eq_crime = along(equilibrium.intensities[0]);
    let attains_min = eq_crime <= grid_min + grid_tolerance;
    let attains_max = eq_crime >= grid_max - grid_tolerance;
    let t = equilibrium.intensities[0];
    let step = 1e-4 * (hi - lo);
    let local_second_derivative = (along(t + step) - 2.0 * eq_crime + along(t - step)) / (step * step);
    let local_first_derivative = (along(t + step) - along(t - step)) / (2.0 * step);
    let verified = match curvature {
        Curvature::Convex => attains_min,
        Curvature::Concave => attains_max,
        Curvature::Linear => attains_min && attains_max,
    };
    Ok(ExtremalityReport {
        curvature,
        equilibrium,
        equilibrium_crime: eq_crime,
        grid_min,
        grid_max,
        grid_tolerance,
        attains_min,
        attains_max,
        local_second_derivative,
        local_first_derivative,
        verified,
    })
}
