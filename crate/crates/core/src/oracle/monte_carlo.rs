//! Agent-level simulation.
//!
//! Each agent draws a marginal benefit `b` from its group's outside option
//! by inverse transform, offends iff its effective disincentive is at most
//! `b`, draws a signal from the matching conditional distribution, and is
//! convicted iff inspected and the signal clears the group's threshold.
//!
//! Work is split into fixed-size chunks, each with its own ChaCha stream
//! keyed by (group, chunk index), so results do not depend on how chunks are
//! scheduled across threads.

use std::ops::Add;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inspection::InspectionProfile;
use crate::policy::ThresholdPolicy;
use crate::population::Scenario;
use crate::signal::Hypothesis;

pub const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub crime_convicted: u64,
    pub crime_acquitted: u64,
    pub innocent_convicted: u64,
    pub innocent_acquitted: u64,
    pub crime_uninspected: u64,
    pub innocent_uninspected: u64,
}

impl Add for CellCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            crime_convicted: self.crime_convicted + o.crime_convicted,
            crime_acquitted: self.crime_acquitted + o.crime_acquitted,
            innocent_convicted: self.innocent_convicted + o.innocent_convicted,
            innocent_acquitted: self.innocent_acquitted + o.innocent_acquitted,
            crime_uninspected: self.crime_uninspected + o.crime_uninspected,
            innocent_uninspected: self.innocent_uninspected + o.innocent_uninspected,
        }
    }
}

impl CellCounts {
    pub fn total(&self) -> u64 {
        self.criminals() + self.innocent_convicted + self.innocent_acquitted + self.innocent_uninspected
    }

    pub fn criminals(&self) -> u64 {
        self.crime_convicted + self.crime_acquitted + self.crime_uninspected
    }

    pub fn inspected_criminals(&self) -> u64 {
        self.crime_convicted + self.crime_acquitted
    }

    pub fn inspected_innocents(&self) -> u64 {
        self.innocent_convicted + self.innocent_acquitted
    }
}

/// Empirical rates of one group. Error rates are conditional on inspection
/// and undefined when their conditioning cell is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMetrics {
    pub crime_rate: f64,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub ppv: Option<f64>,
    pub counts: CellCounts,
    pub n: u64,
    pub seed: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl EmpiricalMetrics {
    fn from_counts(counts: CellCounts, seed: u64) -> Self {
        Self {
            crime_rate: counts.criminals() as f64 / counts.total() as f64,
            fpr: ratio(counts.innocent_convicted, counts.inspected_innocents()),
            fnr: ratio(counts.crime_acquitted, counts.inspected_criminals()),
            ppv: ratio(counts.crime_convicted, counts.crime_convicted + counts.innocent_convicted),
            counts,
            n: counts.total(),
            seed,
        }
    }
}

fn simulate_chunk(
    scenario: &Scenario,
    group: usize,
    threshold: f64,
    theta: f64,
    count: u64,
    seed: u64,
    chunk: u64,
) -> CellCounts {
    let g = &scenario.groups[group];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((group as u64) << 32) | chunk);
    let effective = theta * g.signal.delta_of_threshold(threshold);
    let mut c = CellCounts::default();
    for _ in 0..count {
        let u: f64 = rng.sample(Open01);
        let benefit = g
            .outside_option
            .survivor_inverse(u)
            .expect("open-interval draw lies in the image");
        let crime = effective <= benefit;
        let inspected = theta >= 1.0 || rng.gen::<f64>() < theta;
        if !inspected {
            if crime {
                c.crime_uninspected += 1;
            } else {
                c.innocent_uninspected += 1;
            }
            continue;
        }
        let hyp = if crime { Hypothesis::Crime } else { Hypothesis::Innocent };
        let v: f64 = rng.sample(Open01);
        let s = g.signal.quantile(v, hyp).expect("open-interval draw");
        match (crime, s >= threshold) {
            (true, true) => c.crime_convicted += 1,
            (true, false) => c.crime_acquitted += 1,
            (false, true) => c.innocent_convicted += 1,
            (false, false) => c.innocent_acquitted += 1,
        }
    }
    c
}

/// Simulates `n` agents per group under `policy` (and inspection intensities
/// when given; otherwise every agent is inspected).
pub fn monte_carlo(
    scenario: &Scenario,
    policy: &ThresholdPolicy,
    n: u64,
    seed: u64,
    profile: Option<&InspectionProfile>,
) -> Result<[EmpiricalMetrics; 2]> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let thetas = profile.map_or([1.0, 1.0], |p| p.intensities);
    if thetas.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::InvalidParameter(format!(
            "inspection intensities must lie in [0, 1], got {thetas:?}"
        )));
    }
    let chunks = n.div_ceil(CHUNK);
    let run = |group: usize| -> CellCounts {
        (0..chunks)
            .into_par_iter()
            .map(|k| {
                let count = CHUNK.min(n - k * CHUNK);
                simulate_chunk(scenario, group, policy.thresholds[group], thetas[group], count, seed, k)
            })
            .reduce(CellCounts::default, |a, b| a + b)
    };
    Ok([
        EmpiricalMetrics::from_counts(run(0), seed),
        EmpiricalMetrics::from_counts(run(1), seed),
    ])
}

/// `4·sqrt(p(1 − p)/n)`.
pub fn four_sigma(p: f64, n: u64) -> f64 {
    4.0 * (p * (1.0 - p) / n as f64).sqrt()
}
