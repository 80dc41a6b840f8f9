//! Threshold policies and the statistics they induce in each group.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::population::Scenario;
use crate::signal::{Hypothesis, SignalStructure};

/// PPV is left undefined when fewer than this fraction of agents are labelled guilty.
pub const PPV_DENOMINATOR_FLOOR: f64 = 1e-12;

/// One signal cutoff per group: members with `s >= T_g` are labelled guilty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub thresholds: [f64; 2],
}

impl ThresholdPolicy {
    pub fn new(t1: f64, t2: f64) -> Self {
        Self { thresholds: [t1, t2] }
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.thresholds[1], self.thresholds[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub tpr: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub ppv: Option<f64>,
    pub delta: f64,
    pub crime_rate: f64,
    pub posterior_threshold: Option<f64>,
}

impl GroupMetrics {
    /// Value of the statistic a fairness notion equalizes; `None` when undefined.
    pub fn statistic(&self, notion: FairnessNotion) -> Option<f64> {
        match notion {
            FairnessNotion::Fpr => Some(self.fpr),
            FairnessNotion::Fnr => Some(self.fnr),
            FairnessNotion::Ppv => self.ppv,
            FairnessNotion::Delta => Some(self.delta),
            FairnessNotion::CrimeRate => Some(self.crime_rate),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessNotion {
    Fpr,
    Fnr,
    Ppv,
    Delta,
    #[serde(rename = "cr")]
    CrimeRate,
}

impl FairnessNotion {
    pub const ALL: [FairnessNotion; 5] = [
        FairnessNotion::Fpr,
        FairnessNotion::Fnr,
        FairnessNotion::Ppv,
        FairnessNotion::Delta,
        FairnessNotion::CrimeRate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FairnessNotion::Fpr => "fpr",
            FairnessNotion::Fnr => "fnr",
            FairnessNotion::Ppv => "ppv",
            FairnessNotion::Delta => "delta",
            FairnessNotion::CrimeRate => "cr",
        }
    }
}

impl fmt::Display for FairnessNotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FairnessNotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FairnessNotion::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown fairness notion {s:?}; expected one of fpr, fnr, ppv, delta, cr"
                ))
            })
    }
}

fn ppv(crime_rate: f64, tpr: f64, fpr: f64) -> Option<f64> {
    let hit = crime_rate * tpr;
    let denom = hit + (1.0 - crime_rate) * fpr;
    (denom >= PPV_DENOMINATOR_FLOOR).then(|| hit / denom)
}

/// Posterior crime probability at signal `s` given the prior `crime_rate`.
///
/// Computed on the log-odds scale; degenerate priors are returned as-is.
pub fn posterior_given_rate(signal: &SignalStructure, crime_rate: f64, s: f64) -> f64 {
    if crime_rate <= 0.0 || crime_rate >= 1.0 {
        return crime_rate.clamp(0.0, 1.0);
    }
    let llr = signal.ln_pdf(s, Hypothesis::Crime) - signal.ln_pdf(s, Hypothesis::Innocent);
    let log_odds = llr + crime_rate.ln() - (-crime_rate).ln_1p();
    if log_odds.is_nan() {
        return crime_rate;
    }
    1.0 / (1.0 + (-log_odds).exp())
}

/// Metrics of one group under threshold `t`.
pub fn metrics_for(scenario: &Scenario, group: usize, t: f64) -> GroupMetrics {
    let g = &scenario.groups[group];
    let tpr = g.signal.tpr(t);
    let fpr = g.signal.fpr(t);
    let delta = g.signal.delta_of_threshold(t);
    let crime_rate = g.outside_option.crime_rate(delta);
    let posterior = t.is_finite().then(|| posterior_given_rate(&g.signal, crime_rate, t));
    GroupMetrics {
        tpr,
        fpr,
        fnr: 1.0 - tpr,
        ppv: ppv(crime_rate, tpr, fpr),
        delta,
        crime_rate,
        posterior_threshold: posterior,
    }
}

pub fn group_metrics(scenario: &Scenario, policy: &ThresholdPolicy) -> [GroupMetrics; 2] {
    [
        metrics_for(scenario, 0, policy.thresholds[0]),
        metrics_for(scenario, 1, policy.thresholds[1]),
    ]
}

/// `Σ_g N_g · CR_g`.
pub fn total_crime(scenario: &Scenario, policy: &ThresholdPolicy) -> f64 {
    scenario
        .groups
        .iter()
        .zip(policy.thresholds)
        .map(|(g, t)| g.population * g.outside_option.crime_rate(g.signal.delta_of_threshold(t)))
        .sum()
}

/// `Pr(crime | s, g)` with the prior set endogenously by the policy.
pub fn posterior(scenario: &Scenario, policy: &ThresholdPolicy, group: usize, s: f64) -> f64 {
    let g = &scenario.groups[group];
    let cr = g
        .outside_option
        .crime_rate(g.signal.delta_of_threshold(policy.thresholds[group]));
    posterior_given_rate(&g.signal, cr, s)
}

/// Posterior at each group's own cutoff.
pub fn posterior_thresholds(scenario: &Scenario, policy: &ThresholdPolicy) -> [f64; 2] {
    [0, 1].map(|g| posterior(scenario, policy, g, policy.thresholds[g]))
}
