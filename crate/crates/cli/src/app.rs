//! Command-line arguments and command dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crimefair::inspection::{first_best, intensity_extremality_check, second_best};
use crimefair::optimize::verify::verify_properties;
use crimefair::optimize::{compare_notions, solve_fair, solve_unconstrained};
use crimefair::oracle::monte_carlo::monte_carlo;
use crimefair::{Error, FairnessNotion, InspectionProfile, Scenario, ThresholdPolicy};

use crate::report::{Report, TheoremEntry};
use crate::scenario_file::{parse_scenario, LoadError};
use crate::sweep::{sweep_csv, SweepError};

pub const EXIT_FILE: i32 = 2;
pub const EXIT_SCHEMA: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;
pub const EXIT_SOLVER: i32 = 5;
pub const EXIT_VERIFICATION: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "crimefair", version, about = "Optimal and fairness-constrained threshold policies with endogenous crime")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (JSON).
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    First,
    Second,
    Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Inspection {
    First,
    Second,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Crime-minimizing thresholds without a fairness constraint.
    Solve(Common),
    /// Crime-minimizing thresholds under one fairness notion.
    Fair {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_notion)]
        notion: FairnessNotion,
    },
    /// Every fairness notion side by side.
    Compare(Common),
    /// Inspection game with limited capacity.
    Inspect {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Mode,
    },
    /// Agent-level simulation of a policy.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: u64,
        /// JSON report or `{"thresholds": [t1, t2]}`; defaults to the unconstrained optimum.
        #[arg(long)]
        policy_from: Option<PathBuf>,
        /// Inspect with first- or second-best intensities instead of everyone.
        #[arg(long, value_enum)]
        inspection: Option<Inspection>,
    },
    /// Re-solve while one scenario parameter varies; writes CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted path into the scenario document, e.g. `groups.1.signal.crime_shift`.
        #[arg(long)]
        param: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
        /// Solve under this notion instead of unconstrained.
        #[arg(long, value_parser = parse_notion)]
        notion: Option<FairnessNotion>,
    },
    /// Check every structural property whose hypotheses the scenario meets.
    Verify(Common),
}

fn parse_notion(s: &str) -> Result<FairnessNotion, String> {
    s.parse::<FairnessNotion>().map_err(|e| e.to_string())
}

/// A failed command: message for stderr plus the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
    /// Output to print before failing (verification reports).
    pub output: Option<String>,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            output: None,
        }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        let code = match e {
            LoadError::File(_) => EXIT_FILE,
            LoadError::Schema(_) => EXIT_SCHEMA,
            LoadError::Invariant(_) => EXIT_INVARIANT,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_solver_failure() { EXIT_SOLVER } else { EXIT_INVARIANT };
        Failure::new(code, e.to_string())
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Path(msg) => Failure::new(EXIT_SCHEMA, msg),
            SweepError::Load { value, error } => {
                let mut f = Failure::from(error);
                f.message = format!("at sweep value {value}: {}", f.message);
                f
            }
            SweepError::Usage(msg) => Failure::new(EXIT_INVARIANT, msg),
        }
    }
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Table => report.to_table(),
    }
}

#[derive(Deserialize)]
struct PolicyDoc {
    thresholds: [f64; 2],
}

#[derive(Deserialize)]
struct ReportDoc {
    solutions: Vec<ReportSolution>,
}

#[derive(Deserialize)]
struct ReportSolution {
    thresholds: Option<[f64; 2]>,
}

fn read_policy(path: &Path) -> Result<ThresholdPolicy, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_FILE, format!("cannot read {}: {e}", path.display())))?;
    let schema = |msg: String| Failure::new(EXIT_SCHEMA, format!("{}: {msg}", path.display()));
    let thresholds = if let Ok(p) = serde_json::from_str::<PolicyDoc>(&text) {
        p.thresholds
    } else {
        let r: ReportDoc = serde_json::from_str(&text).map_err(|e| schema(e.to_string()))?;
        r.solutions
            .iter()
            .find_map(|s| s.thresholds)
            .ok_or_else(|| schema("the report holds no solved policy".into()))?
    };
    if thresholds.iter().any(|t| !t.is_finite()) {
        return Err(Failure::new(EXIT_INVARIANT, "policy thresholds must be finite"));
    }
    Ok(ThresholdPolicy { thresholds })
}

fn simulate(
    scenario: &Scenario,
    n: u64,
    seed: u64,
    policy_from: Option<&Path>,
    inspection: Option<Inspection>,
) -> Result<Report, Failure> {
    let mut report = Report::new("simulate", scenario);
    let (policy, profile) = match inspection {
        Some(mode) => {
            let game = match mode {
                Inspection::First => first_best(scenario)?,
                Inspection::Second => second_best(scenario)?,
            };
            let policy = match policy_from {
                Some(p) => read_policy(p)?,
                None => game.policy,
            };
            report.push_game(scenario, "game", &game);
            (policy, Some(game.profile))
        }
        None => {
            let policy = match policy_from {
                Some(p) => read_policy(p)?,
                None => solve_unconstrained(scenario)?.policy,
            };
            report.push_policy_metrics(scenario, "policy", &policy);
            (policy, None)
        }
    };
    let emp = monte_carlo(scenario, &policy, n, seed, profile.as_ref())?;
    report.push_empirical(scenario, "simulated", &emp, profile.map(|p: InspectionProfile| p.intensities));
    Ok(report)
}

/// Runs a command and returns what it prints on stdout.
pub fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Solve(c) => {
            let s = parse_scenario(&c.scenario)?;
            let mut r = Report::new("solve", &s);
            r.push_fair(&s, "unconstrained", &solve_unconstrained(&s)?);
            Ok(render(&r, c.format))
        }
        Command::Fair { common, notion } => {
            let s = parse_scenario(&common.scenario)?;
            let sol = solve_fair(&s, notion)?;
            let mut r = Report::new("fair", &s);
            r.push_fair(&s, notion.as_str(), &sol);
            Ok(render(&r, common.format))
        }
        Command::Compare(c) => {
            let s = parse_scenario(&c.scenario)?;
            let cmp = compare_notions(&s)?;
            let mut r = Report::new("compare", &s);
            r.push_fair(&s, "unconstrained", &cmp.unconstrained);
            for o in &cmp.notions {
                match (&o.solution, &o.error) {
                    (Some(sol), _) => r.push_fair(&s, o.notion.as_str(), sol),
                    (None, err) => r.push_failure(o.notion.as_str(), err.clone().unwrap_or_default()),
                }
            }
            r.theorem_report.push(TheoremEntry::Flag {
                name: "error_parity_condition".into(),
                value: cmp.error_parity_condition,
            });
            r.theorem_report.push(TheoremEntry::Value {
                name: "crime_parity_epsilon".into(),
                value: cmp.crime_parity_epsilon,
            });
            Ok(render(&r, c.format))
        }
        Command::Inspect { common, mode } => {
            let s = parse_scenario(&common.scenario)?;
            let mut r = Report::new("inspect", &s);
            match mode {
                Mode::First => r.push_game(&s, "first_best", &first_best(&s)?),
                Mode::Second => r.push_game(&s, "second_best", &second_best(&s)?),
                Mode::Check => {
                    let check = intensity_extremality_check(&s)?;
                    r.push_game(&s, "second_best", &second_best(&s)?);
                    r.theorem_report.push(TheoremEntry::Extremality(check));
                    if !check.verified {
                        return Err(Failure {
                            code: EXIT_VERIFICATION,
                            message: "the equilibrium does not attain the predicted extremum".into(),
                            output: Some(render(&r, common.format)),
                        });
                    }
                }
            }
            Ok(render(&r, common.format))
        }
        Command::Simulate {
            common,
            n,
            seed,
            policy_from,
            inspection,
        } => {
            let s = parse_scenario(&common.scenario)?;
            let r = simulate(&s, n, seed, policy_from.as_deref(), inspection)?;
            Ok(render(&r, common.format))
        }
        Command::Sweep {
            common,
            param,
            from,
            to,
            steps,
            out,
            notion,
        } => {
            let s = parse_scenario(&common.scenario)?;
            let csv = sweep_csv(&s, &param, from, to, steps, notion)?;
            std::fs::write(&out, csv)
                .map_err(|e| Failure::new(EXIT_FILE, format!("cannot write {}: {e}", out.display())))?;
            Ok(format!("wrote {steps} rows to {}\n", out.display()))
        }
        Command::Verify(c) => {
            let s = parse_scenario(&c.scenario)?;
            let report = verify_properties(&s)?;
            let mut r = Report::new("verify", &s);
            r.theorem_report = report.records.iter().cloned().map(TheoremEntry::Property).collect();
            let text = render(&r, c.format);
            if report.passed() {
                Ok(text)
            } else {
                let failed: Vec<&str> = report
                    .records
                    .iter()
                    .filter(|x| x.failed())
                    .map(|x| x.name.as_str())
                    .collect();
                Err(Failure {
                    code: EXIT_VERIFICATION,
                    message: format!("verification failed: {}", failed.join(", ")),
                    output: Some(text),
                })
            }
        }
    }
}
