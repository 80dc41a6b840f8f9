//! Brute-force search over a square grid of threshold pairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::linspace;
use crate::optimize::{constraint_residual, FairSolution};
use crate::policy::{metrics_for, FairnessNotion, ThresholdPolicy};
use crate::population::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSolution {
    pub solution: FairSolution,
    /// Certified distance between the grid optimum and the constrained optimum.
    pub bound: f64,
    pub feasible_pairs: usize,
    pub resolution: usize,
}

struct Axis {
    thresholds: Vec<f64>,
    stat: Vec<Option<f64>>,
    /// Largest step of `stat` into either neighbour.
    slack: Vec<f64>,
    crime: Vec<f64>,
}

fn axis(scenario: &Scenario, group: usize, notion: FairnessNotion, resolution: usize) -> Result<Axis> {
    let (lo, hi) = scenario.groups[group].signal.threshold_span(0.0005, 0.9995)?;
    let thresholds = linspace(lo, hi, resolution);
    let n = scenario.groups[group].population;
    let metrics: Vec<_> = thresholds.iter().map(|&t| metrics_for(scenario, group, t)).collect();
    let stat: Vec<Option<f64>> = metrics.iter().map(|m| m.statistic(notion)).collect();
    let step = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => (a - b).abs(),
        _ => 0.0,
    };
    let slack = (0..resolution)
        .map(|i| {
            let left = if i > 0 { step(stat[i], stat[i - 1]) } else { 0.0 };
            let right = if i + 1 < resolution { step(stat[i], stat[i + 1]) } else { 0.0 };
            left.max(right)
        })
        .collect();
    let crime = metrics.iter().map(|m| n * m.crime_rate).collect();
    Ok(Axis {
        thresholds,
        stat,
        slack,
        crime,
    })
}

fn max_step(v: &[f64]) -> f64 {
    v.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
}

/// Scans `resolution²` threshold pairs over each group's 0.0005..0.9995
/// quantile span, keeps pairs whose constraint gap is within the local grid
/// step, and returns the crime-minimal one.
///
/// The bound is twice the largest change in either group's crime between
/// neighbouring grid thresholds: any feasible policy has a grid neighbour
/// within that much crime, and vice versa.
pub fn grid_best_fair(scenario: &Scenario, notion: FairnessNotion, resolution: usize) -> Result<GridSolution> {
    if resolution < 64 {
        return Err(Error::InvalidParameter(format!(
            "grid resolution must be at least 64, got {resolution}"
        )));
    }
    let a = axis(scenario, 0, notion, resolution)?;
    let b = axis(scenario, 1, notion, resolution)?;
    let best_per_row: Vec<(f64, usize, usize, usize)> = (0..resolution)
        .into_par_iter()
        .filter_map(|i| {
            let s1 = a.stat[i]?;
            let mut count = 0;
            let mut best: Option<(f64, usize)> = None;
            for j in 0..resolution {
                let Some(s2) = b.stat[j] else { continue };
                if (s1 - s2).abs() <= a.slack[i].max(b.slack[j]) {
                    count += 1;
                    let c = a.crime[i] + b.crime[j];
                    if best.is_none_or(|(v, _)| c < v) {
                        best = Some((c, j));
                    }
                }
            }
            best.map(|(c, j)| (c, i, j, count))
        })
        .collect();
    let feasible_pairs = best_per_row.iter().map(|r| r.3).sum();
    let &(crime, i, j, _) = best_per_row
        .iter()
        .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))
        .ok_or_else(|| Error::infeasible(notion, "no grid pair satisfies the constraint"))?;
    let policy = ThresholdPolicy::new(a.thresholds[i], b.thresholds[j]);
    Ok(GridSolution {
        solution: FairSolution {
            policy,
            crime,
            notion: Some(notion),
            residual: constraint_residual(scenario, notion, &policy),
            multiple_roots: false,
        },
        bound: 2.0 * (max_step(&a.crime) + max_step(&b.crime)),
        feasible_pairs,
        resolution,
    })
}
