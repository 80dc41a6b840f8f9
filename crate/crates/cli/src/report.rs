//! Command output: one JSON schema, rendered either as JSON or as a table.

use std::fmt::Write;

use serde::Serialize;

use crimefair::inspection::{ExtremalityReport, GameSolution};
use crimefair::optimize::verify::PropertyRecord;
use crimefair::oracle::monte_carlo::EmpiricalMetrics;
use crimefair::policy::{group_metrics, posterior_thresholds};
use crimefair::{FairSolution, Scenario, ThresholdPolicy};

use crate::format::{opt_sig12, sig12};
use crate::scenario_file::ScenarioDoc;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub scenario: ScenarioDoc,
    pub solutions: Vec<SolutionEntry>,
    pub metrics: Vec<MetricsEntry>,
    pub theorem_report: Vec<TheoremEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionEntry {
    pub label: String,
    pub thresholds: Option<[f64; 2]>,
    pub crime: Option<f64>,
    pub residual: Option<f64>,
    pub multiple_roots: bool,
    pub intensities: Option<[f64; 2]>,
    pub interior: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsEntry {
    pub label: String,
    pub group: String,
    /// `analytic` or `empirical`.
    pub source: String,
    pub crime_rate: f64,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub ppv: Option<f64>,
    pub delta: Option<f64>,
    pub posterior_threshold: Option<f64>,
    pub intensity: Option<f64>,
    pub n: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum TheoremEntry {
    Property(PropertyRecord),
    Extremality(ExtremalityReport),
    Value { name: String, value: Option<f64> },
    Flag { name: String, value: Option<bool> },
}

impl Report {
    pub fn new(command: &str, scenario: &Scenario) -> Self {
        Self {
            command: command.into(),
            scenario: ScenarioDoc::from_scenario(scenario),
            solutions: Vec::new(),
            metrics: Vec::new(),
            theorem_report: Vec::new(),
        }
    }

    pub fn push_fair(&mut self, scenario: &Scenario, label: &str, sol: &FairSolution) {
        self.solutions.push(SolutionEntry {
            label: label.into(),
            thresholds: Some(sol.policy.thresholds),
            crime: Some(sol.crime),
            residual: Some(sol.residual),
            multiple_roots: sol.multiple_roots,
            intensities: None,
            interior: None,
            error: None,
        });
        self.push_policy_metrics(scenario, label, &sol.policy);
    }

    pub fn push_failure(&mut self, label: &str, error: String) {
        self.solutions.push(SolutionEntry {
            label: label.into(),
            thresholds: None,
            crime: None,
            residual: None,
            multiple_roots: false,
            intensities: None,
            interior: None,
            error: Some(error),
        });
    }

    pub fn push_policy_metrics(&mut self, scenario: &Scenario, label: &str, policy: &ThresholdPolicy) {
        let m = group_metrics(scenario, policy);
        for (g, gm) in m.iter().enumerate() {
            self.metrics.push(MetricsEntry {
                label: label.into(),
                group: scenario.groups[g].name.clone(),
                source: "analytic".into(),
                crime_rate: gm.crime_rate,
                tpr: Some(gm.tpr),
                fpr: Some(gm.fpr),
                fnr: Some(gm.fnr),
                ppv: gm.ppv,
                delta: Some(gm.delta),
                posterior_threshold: gm.posterior_threshold,
                intensity: None,
                n: None,
                seed: None,
            });
        }
    }

    /// Game solution; error rates are conditional on inspection.
    pub fn push_game(&mut self, scenario: &Scenario, label: &str, sol: &GameSolution) {
        self.solutions.push(SolutionEntry {
            label: label.into(),
            thresholds: Some(sol.policy.thresholds),
            crime: Some(sol.crime),
            residual: None,
            multiple_roots: false,
            intensities: Some(sol.profile.intensities),
            interior: Some(sol.interior),
            error: None,
        });
        let post = posterior_thresholds(scenario, &sol.policy);
        for (g, (c, p)) in sol.conditional_metrics.iter().zip(post).enumerate() {
            self.metrics.push(MetricsEntry {
                label: label.into(),
                group: scenario.groups[g].name.clone(),
                source: "analytic".into(),
                crime_rate: sol.crime_rates[g],
                tpr: Some(c.ctpr),
                fpr: Some(c.cfpr),
                fnr: Some(1.0 - c.ctpr),
                ppv: None,
                delta: Some(c.ctpr - c.cfpr),
                posterior_threshold: Some(p).filter(|p| p.is_finite()),
                intensity: Some(sol.profile.intensities[g]),
                n: None,
                seed: None,
            });
        }
    }

    pub fn push_empirical(&mut self, scenario: &Scenario, label: &str, emp: &[EmpiricalMetrics; 2], thetas: Option<[f64; 2]>) {
        for (g, e) in emp.iter().enumerate() {
            self.metrics.push(MetricsEntry {
                label: label.into(),
                group: scenario.groups[g].name.clone(),
                source: "empirical".into(),
                crime_rate: e.crime_rate,
                tpr: e.fnr.map(|f| 1.0 - f),
                fpr: e.fpr,
                fnr: e.fnr,
                ppv: e.ppv,
                delta: None,
                posterior_threshold: None,
                intensity: thetas.map(|t| t[g]),
                n: Some(e.n),
                seed: Some(e.seed),
            });
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        let names: Vec<&str> = self.scenario.groups.iter().map(|g| g.name.as_str()).collect();
        let _ = writeln!(out, "groups: {}", names.join(", "));
        if !self.solutions.is_empty() {
            let _ = writeln!(out, "\nsolutions");
            let _ = writeln!(
                out,
                "{:<16} {:>16} {:>16} {:>16} {:>12} {:>16}",
                "label", "T_1", "T_2", "crime", "residual", "theta"
            );
            for s in &self.solutions {
                if let Some(err) = &s.error {
                    let _ = writeln!(out, "{:<16} error: {err}", s.label);
                    continue;
                }
                let t = s.thresholds.unwrap_or([f64::NAN; 2]);
                let theta = s
                    .intensities
                    .map_or_else(|| "-".to_string(), |i| format!("{}/{}", short(i[0]), short(i[1])));
                let flag = if s.multiple_roots { " (multiple roots)" } else { "" };
                let _ = writeln!(
                    out,
                    "{:<16} {:>16} {:>16} {:>16} {:>12} {:>16}{flag}",
                    s.label,
                    sig12(t[0]),
                    sig12(t[1]),
                    opt_sig12(s.crime),
                    s.residual.map_or_else(|| "-".to_string(), short),
                    theta
                );
            }
        }
        if !self.metrics.is_empty() {
            let _ = writeln!(out, "\nmetrics");
            let _ = writeln!(
                out,
                "{:<16} {:<8} {:<9} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
                "label", "group", "source", "crime", "fpr", "fnr", "ppv", "delta", "posterior"
            );
            for m in &self.metrics {
                let o = |x: Option<f64>| x.map_or_else(|| "-".to_string(), short);
                let _ = writeln!(
                    out,
                    "{:<16} {:<8} {:<9} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
                    m.label,
                    m.group,
                    m.source,
                    short(m.crime_rate),
                    o(m.fpr),
                    o(m.fnr),
                    o(m.ppv),
                    o(m.delta),
                    o(m.posterior_threshold)
                );
            }
        }
        if !self.theorem_report.is_empty() {
            let _ = writeln!(out, "\nchecks");
            for t in &self.theorem_report {
                let _ = writeln!(out, "{}", theorem_line(t));
            }
        }
        out
    }
}

fn short(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_finite() && x.abs() >= 1e-4 && x.abs() < 1e6 {
        format!("{x:.6}")
    } else {
        format!("{x:.3e}")
    }
}

fn theorem_line(t: &TheoremEntry) -> String {
    match t {
        TheoremEntry::Property(r) => {
            let status = match (r.hypotheses_hold, r.conclusion) {
                (false, _) => "n/a ",
                (true, Some(true)) => "PASS",
                (true, Some(false)) => "FAIL",
                (true, None) => "??? ",
            };
            let mut line = format!("{status} {}", r.name);
            for (k, v) in &r.witnesses {
                let _ = write!(line, " {k}={}", short(*v));
            }
            if let Some(note) = &r.note {
                let _ = write!(line, " [{note}]");
            }
            line
        }
        TheoremEntry::Extremality(e) => format!(
            "{} equilibrium extremality ({:?}): crime {} vs grid [{}, {}] ± {}",
            if e.verified { "PASS" } else { "FAIL" },
            e.curvature,
            sig12(e.equilibrium_crime),
            sig12(e.grid_min),
            sig12(e.grid_max),
            short(e.grid_tolerance)
        ),
        TheoremEntry::Value { name, value } => format!("     {name} = {}", opt_sig12(*value)),
        TheoremEntry::Flag { name, value } => format!(
            "     {name} = {}",
            value.map_or_else(|| "undefined".to_string(), |b| b.to_string())
        ),
    }
}
