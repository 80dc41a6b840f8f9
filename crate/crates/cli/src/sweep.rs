//! One-parameter sweeps written as CSV.

use rayon::prelude::*;

use crimefair::optimize::{solve_fair, solve_unconstrained};
use crimefair::policy::group_metrics;
use crimefair::{FairnessNotion, Scenario};

use crate::format::{opt_sig12, sig12};
use crate::scenario_file::{scenario_from_value, LoadError, ScenarioDoc};

pub const HEADER: &str = "param_value,crime_total,crime_g1,crime_g2,fpr_g1,fpr_g2,fnr_g1,fnr_g2,\
ppv_g1,ppv_g2,delta_g1,delta_g2,posterior_thr_g1,posterior_thr_g2";

#[derive(Debug, Clone, PartialEq)]
pub enum SweepError {
    /// The path does not name a numeric field of the scenario document.
    Path(String),
    /// A swept value produces an invalid scenario.
    Load { value: f64, error: LoadError },
    Usage(String),
}

/// `steps` evenly spaced values from `from` to `to` inclusive.
pub fn sweep_values(from: f64, to: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..steps)
            .map(|i| {
                if i == steps - 1 {
                    to
                } else {
                    from + (to - from) * i as f64 / (steps - 1) as f64
                }
            })
            .collect(),
    }
}

fn pointer(path: &str) -> String {
    path.split('.').fold(String::new(), |mut acc, part| {
        acc.push('/');
        acc.push_str(part);
        acc
    })
}

/// Copy of `base` with the field at the dotted `path` set to `value`.
pub fn with_param(base: &ScenarioDoc, path: &str, value: f64) -> Result<Scenario, SweepError> {
    let mut doc = serde_json::to_value(base).expect("document serializes");
    let slot = doc
        .pointer_mut(&pointer(path))
        .filter(|v| v.is_number())
        .ok_or_else(|| SweepError::Path(format!("{path:?} does not name a numeric field of the scenario")))?;
    *slot = serde_json::Number::from_f64(value)
        .map(serde_json::Value::Number)
        .ok_or_else(|| SweepError::Usage(format!("sweep value {value} is not finite")))?;
    scenario_from_value(&doc).map_err(|error| SweepError::Load { value, error })
}

/// One CSV row; solver failures leave every column but the first as `nan`.
fn row(value: f64, scenario: &Scenario, notion: Option<FairnessNotion>) -> String {
    let solved = match notion {
        Some(n) => solve_fair(scenario, n),
        None => solve_unconstrained(scenario),
    };
    let Ok(sol) = solved else {
        let mut line = sig12(value);
        line.push_str(&",nan".repeat(13));
        return line;
    };
    let m = group_metrics(scenario, &sol.policy);
    let cols = [
        Some(sol.crime),
        Some(m[0].crime_rate),
        Some(m[1].crime_rate),
        Some(m[0].fpr),
        Some(m[1].fpr),
        Some(m[0].fnr),
        Some(m[1].fnr),
        m[0].ppv,
        m[1].ppv,
        Some(m[0].delta),
        Some(m[1].delta),
        m[0].posterior_threshold,
        m[1].posterior_threshold,
    ];
    let mut line = sig12(value);
    for c in cols {
        line.push(',');
        line.push_str(&opt_sig12(c));
    }
    line
}

/// Full CSV text, rows in parameter order.
pub fn sweep_csv(
    base: &Scenario,
    path: &str,
    from: f64,
    to: f64,
    steps: usize,
    notion: Option<FairnessNotion>,
) -> Result<String, SweepError> {
    if steps == 0 {
        return Err(SweepError::Usage("--steps must be at least 1".into()));
    }
    if !(from.is_finite() && to.is_finite()) {
        return Err(SweepError::Usage("sweep bounds must be finite".into()));
    }
    let doc = ScenarioDoc::from_scenario(base);
    let values = sweep_values(from, to, steps);
    let scenarios = values
        .iter()
        .map(|&v| with_param(&doc, path, v))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<String> = values
        .par_iter()
        .zip(scenarios.par_iter())
        .map(|(&v, s)| row(v, s, notion))
        .collect();
    let mut out = String::with_capacity(HEADER.len() + rows.len() * 200);
    out.push_str(HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    Ok(out)
}
