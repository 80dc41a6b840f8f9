//! Scenario files: JSON documents with two groups and an optional inspection
//! capacity. Parsing keeps byte spans so every diagnostic names a line.

use std::fmt;
use std::path::Path;

use json_spanned_value::Spanned;
use serde::{Deserialize, Serialize};

use crimefair::{BaseDensity, Group, Scenario, SignalStructure, SurvivorFunction};

/// One diagnostic anchored at a line and column of the source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadError {
    /// The file could not be read.
    File(String),
    /// Not JSON, or not shaped like a scenario.
    Schema(Vec<Diagnostic>),
    /// Well-formed but violates a model invariant.
    Invariant(Vec<Diagnostic>),
}

fn join(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::File(msg) => write!(f, "{msg}"),
            LoadError::Schema(d) => write!(f, "schema error\n{}", join(d)),
            LoadError::Invariant(d) => write!(f, "invariant violation\n{}", join(d)),
        }
    }
}

impl std::error::Error for LoadError {}

type S<T> = Spanned<T>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    groups: S<Vec<S<RawGroup>>>,
    #[serde(default)]
    inspection: Option<S<RawInspection>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroup {
    name: S<String>,
    population: S<f64>,
    outside_option: S<RawSurvivor>,
    signal: S<RawSignal>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurvivor {
    family: S<String>,
    mu: S<f64>,
    #[serde(default)]
    sigma: Option<S<f64>>,
    #[serde(default)]
    p: Option<S<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignal {
    base: S<String>,
    mu: S<f64>,
    sigma: S<f64>,
    crime_shift: S<f64>,
    #[serde(default)]
    sigma_left: Option<S<f64>>,
    #[serde(default)]
    sigma_right: Option<S<f64>>,
    #[serde(default)]
    mode: Option<S<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInspection {
    capacity: S<f64>,
}

/// Serialized form of a scenario, matching the file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub groups: Vec<GroupDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inspection: Option<InspectionDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDoc {
    pub name: String,
    pub population: f64,
    pub outside_option: SurvivorDoc,
    pub signal: SignalDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivorDoc {
    pub family: String,
    pub mu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalDoc {
    pub base: String,
    pub mu: f64,
    pub sigma: f64,
    pub crime_shift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_left: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_right: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionDoc {
    pub capacity: f64,
}

impl ScenarioDoc {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            groups: s.groups.iter().map(group_doc).collect(),
            inspection: s.inspection_capacity.map(|capacity| InspectionDoc { capacity }),
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("plain data serializes");
        out.push('\n');
        out
    }
}

fn group_doc(g: &Group) -> GroupDoc {
    let outside_option = match g.outside_option {
        SurvivorFunction::NormalSurvivor { mu, scale } => SurvivorDoc {
            family: "normal".into(),
            mu,
            sigma: Some(scale),
            p: None,
        },
        SurvivorFunction::LogisticSurvivor { mu, scale } => SurvivorDoc {
            family: "logistic".into(),
            mu,
            sigma: Some(scale),
            p: None,
        },
        SurvivorFunction::PowerSurvivor { mu, p } => SurvivorDoc {
            family: "power".into(),
            mu,
            sigma: None,
            p: Some(p),
        },
    };
    let sig = &g.signal;
    let mut signal = SignalDoc {
        base: String::new(),
        mu: sig.mu,
        sigma: sig.sigma,
        crime_shift: sig.crime_shift,
        sigma_left: None,
        sigma_right: None,
        mode: None,
    };
    signal.base = match sig.base {
        BaseDensity::Normal => "normal".into(),
        BaseDensity::Logistic => "logistic".into(),
        BaseDensity::Gumbel => "gumbel".into(),
        BaseDensity::TwoPieceNormal {
            mode,
            sigma_left,
            sigma_right,
        } => {
            signal.sigma_left = Some(sigma_left);
            signal.sigma_right = Some(sigma_right);
            signal.mode = (mode != 0.0).then_some(mode);
            "two_piece_normal".into()
        }
    };
    GroupDoc {
        name: g.name.clone(),
        population: g.population,
        outside_option,
        signal,
    }
}

/// 1-based line and column of a byte offset.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

struct Collector<'a> {
    text: &'a str,
    schema: Vec<Diagnostic>,
    invariant: Vec<Diagnostic>,
}

impl<'a> Collector<'a> {
    fn at<T>(&self, span: &S<T>, message: String) -> Diagnostic {
        let (line, column) = position(self.text, span.start());
        Diagnostic { line, column, message }
    }

    fn schema<T>(&mut self, span: &S<T>, message: impl Into<String>) {
        let d = self.at(span, message.into());
        self.schema.push(d);
    }

    fn invariant<T>(&mut self, span: &S<T>, message: impl Into<String>) {
        let d = self.at(span, message.into());
        self.invariant.push(d);
    }

    fn positive(&mut self, v: &S<f64>, what: &str) -> f64 {
        let x = *v.get_ref();
        if !(x.is_finite() && x > 0.0) {
            self.invariant(v, format!("{what} must be positive and finite, got {x}"));
        }
        x
    }

    fn finite(&mut self, v: &S<f64>, what: &str) -> f64 {
        let x = *v.get_ref();
        if !x.is_finite() {
            self.invariant(v, format!("{what} must be finite, got {x}"));
        }
        x
    }

    fn survivor(&mut self, raw: &S<RawSurvivor>, g: usize) -> Option<SurvivorFunction> {
        let r = raw.get_ref();
        let mu = self.finite(&r.mu, &format!("groups[{g}].outside_option.mu"));
        let family = r.family.get_ref().as_str();
        let scale = |c: &mut Self| match &r.sigma {
            Some(s) => Some(c.positive(s, &format!("groups[{g}].outside_option.sigma"))),
            None => {
                c.schema(raw, format!("groups[{g}].outside_option: family {family} needs sigma"));
                None
            }
        };
        let out = match family {
            "normal" => SurvivorFunction::NormalSurvivor { mu, scale: scale(self)? },
            "logistic" => SurvivorFunction::LogisticSurvivor { mu, scale: scale(self)? },
            "power" => match &r.p {
                Some(p) => SurvivorFunction::PowerSurvivor {
                    mu,
                    p: self.positive(p, &format!("groups[{g}].outside_option.p")),
                },
                None => {
                    self.schema(raw, format!("groups[{g}].outside_option: family power needs p"));
                    return None;
                }
            },
            other => {
                self.schema(
                    &r.family,
                    format!("groups[{g}].outside_option.family: unknown family {other:?} (normal|logistic|power)"),
                );
                return None;
            }
        };
        let stray = if family == "power" {
            r.sigma.is_some().then_some("sigma")
        } else {
            r.p.is_some().then_some("p")
        };
        if let Some(key) = stray {
            self.schema(raw, format!("groups[{g}].outside_option: {key} does not apply to family {family}"));
        }
        Some(out)
    }

    fn signal(&mut self, raw: &S<RawSignal>, g: usize) -> Option<SignalStructure> {
        let r = raw.get_ref();
        let path = |k: &str| format!("groups[{g}].signal.{k}");
        let mu = self.finite(&r.mu, &path("mu"));
        let sigma = self.positive(&r.sigma, &path("sigma"));
        let shift = self.positive(&r.crime_shift, &path("crime_shift"));
        let base_name = r.base.get_ref().as_str();
        let two_piece_keys = [("sigma_left", &r.sigma_left), ("sigma_right", &r.sigma_right), ("mode", &r.mode)];
        let base = match base_name {
            "normal" | "logistic" | "gumbel" => {
                for (key, v) in two_piece_keys {
                    if v.is_some() {
                        self.schema(raw, format!("{}: {key} only applies to two_piece_normal", path("base")));
                    }
                }
                match base_name {
                    "normal" => BaseDensity::Normal,
                    "logistic" => BaseDensity::Logistic,
                    _ => BaseDensity::Gumbel,
                }
            }
            "two_piece_normal" => {
                let (Some(l), Some(rr)) = (&r.sigma_left, &r.sigma_right) else {
                    self.schema(raw, format!("groups[{g}].signal: two_piece_normal needs sigma_left and sigma_right"));
                    return None;
                };
                BaseDensity::TwoPieceNormal {
                    mode: match &r.mode {
                        Some(m) => self.finite(m, &path("mode")),
                        None => 0.0,
                    },
                    sigma_left: self.positive(l, &path("sigma_left")),
                    sigma_right: self.positive(rr, &path("sigma_right")),
                }
            }
            other => {
                self.schema(
                    &r.base,
                    format!("{}: unknown base {other:?} (normal|logistic|gumbel|two_piece_normal)", path("base")),
                );
                return None;
            }
        };
        Some(SignalStructure::new_unchecked(base, mu, sigma, shift))
    }
}

/// Parses and validates scenario text, reporting every violation found.
pub fn parse_scenario_str(text: &str) -> Result<Scenario, LoadError> {
    let raw: RawScenario = json_spanned_value::from_str(text).map_err(|e| {
        LoadError::Schema(vec![Diagnostic {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }])
    })?;
    let mut c = Collector {
        text,
        schema: Vec::new(),
        invariant: Vec::new(),
    };
    let groups = raw.groups.get_ref();
    if groups.len() != 2 {
        c.schema(&raw.groups, format!("groups must hold exactly two entries, found {}", groups.len()));
        return Err(LoadError::Schema(c.schema));
    }
    let mut built = Vec::new();
    for (g, raw_group) in groups.iter().enumerate() {
        let rg = raw_group.get_ref();
        let seen = c.invariant.len();
        let population = c.positive(&rg.population, &format!("groups[{g}].population"));
        let survivor = c.survivor(&rg.outside_option, g);
        let signal = c.signal(&rg.signal, g);
        if let (Some(h), Some(sig)) = (survivor, signal) {
            if let Err(e) = h.validate() {
                c.invariant(&rg.outside_option, format!("groups[{g}].outside_option: {e}"));
            }
            match Group::new(rg.name.get_ref().clone(), population, h, sig) {
                Ok(group) => built.push(group),
                Err(e) if c.invariant.len() == seen => c.invariant(raw_group, format!("groups[{g}]: {e}")),
                Err(_) => {}
            }
        }
    }
    if !c.schema.is_empty() {
        return Err(LoadError::Schema(c.schema));
    }
    let capacity = raw.inspection.as_ref().map(|i| {
        let cap = &i.get_ref().capacity;
        (c.positive(cap, "inspection.capacity"), cap.start())
    });
    if let Some((cap, start)) = capacity {
        let total: f64 = groups.iter().map(|g| *g.get_ref().population.get_ref()).sum();
        if cap.is_finite() && cap > 0.0 && cap >= total {
            let (line, column) = position(text, start);
            c.invariant.push(Diagnostic {
                line,
                column,
                message: format!(
                    "inspection.capacity: search capacity is limited, so capacity {cap} must be below N_1 + N_2 = {total}"
                ),
            });
        }
    }
    if !c.invariant.is_empty() {
        return Err(LoadError::Invariant(c.invariant));
    }
    let [g1, g2]: [Group; 2] = built.try_into().expect("two validated groups");
    Scenario::new([g1, g2], capacity.map(|(cap, _)| cap)).map_err(|e| {
        LoadError::Invariant(vec![Diagnostic {
            line: 1,
            column: 1,
            message: e.to_string(),
        }])
    })
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, LoadError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LoadError::File(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario_str(&text)
}

/// Scenario from an untyped document, as used by parameter sweeps.
pub fn scenario_from_value(value: &serde_json::Value) -> Result<Scenario, LoadError> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    parse_scenario_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crimefair::scenarios;

    #[test]
    fn canonical_scenarios_round_trip() {
        for (name, s) in scenarios::canonical() {
            let text = ScenarioDoc::from_scenario(&s).to_json();
            let back = parse_scenario_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(back, s, "{name}");
            assert_eq!(ScenarioDoc::from_scenario(&back).to_json(), text);
        }
    }

    fn scenario_a_text() -> String {
        ScenarioDoc::from_scenario(&scenarios::scenario_a()).to_json()
    }

    #[test]
    fn zero_sigma_is_an_invariant_violation_on_its_line() {
        let text = scenario_a_text().replacen("\"sigma\": 1.0", "\"sigma\": 0.0", 1);
        let line = text.lines().position(|l| l.contains("\"sigma\": 0.0")).unwrap() + 1;
        match parse_scenario_str(&text) {
            Err(LoadError::Invariant(d)) => {
                assert_eq!(d.len(), 1);
                assert_eq!(d[0].line, line);
                assert!(d[0].message.contains("sigma"));
            }
            other => panic!("expected invariant violation, got {other:?}"),
        }
    }

    #[test]
    fn excess_capacity_cites_the_limit() {
        let doc = ScenarioDoc::from_scenario(&scenarios::scenario_d());
        let mut v = serde_json::to_value(&doc).unwrap();
        v["inspection"]["capacity"] = 2000.0.into();
        match scenario_from_value(&v) {
            Err(LoadError::Invariant(d)) => assert!(d[0].message.contains("search capacity is limited")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn every_violation_is_listed() {
        let text = scenario_a_text()
            .replacen("\"population\": 1000.0", "\"population\": -1.0", 2)
            .replacen("\"crime_shift\": 1.0", "\"crime_shift\": 0.0", 1);
        match parse_scenario_str(&text) {
            Err(LoadError::Invariant(d)) => assert_eq!(d.len(), 3, "{d:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_errors() {
        let unknown = scenario_a_text().replacen("\"family\": \"normal\"", "\"family\": \"cauchy\"", 1);
        assert!(matches!(parse_scenario_str(&unknown), Err(LoadError::Schema(_))));
        let mut v = serde_json::to_value(ScenarioDoc::from_scenario(&scenarios::scenario_a())).unwrap();
        v["groups"][0]["signal"].as_object_mut().unwrap().remove("crime_shift");
        let missing = serde_json::to_string_pretty(&v).unwrap();
        assert!(matches!(parse_scenario_str(&missing), Err(LoadError::Schema(_))));
        assert!(matches!(parse_scenario_str("{ not json"), Err(LoadError::Schema(_))));
        let extra = scenario_a_text().replacen("\"mu\": 0.0,", "\"mu\": 0.0, \"colour\": 1,", 1);
        assert!(matches!(parse_scenario_str(&extra), Err(LoadError::Schema(_))));
    }

    #[test]
    fn missing_file() {
        let e = parse_scenario(Path::new("/nonexistent/scenario.json")).unwrap_err();
        assert!(matches!(e, LoadError::File(_)));
    }
}
