//! Fixed scenarios shared by the tests, the CLI and the files in `scenarios/`,
//! plus seeded generators for randomized checks.

use rand::Rng;

use crate::population::{Group, Scenario, SurvivorFunction};
use crate::signal::{BaseDensity, SignalStructure};

fn normal_signal(m: f64) -> SignalStructure {
    SignalStructure::normal(0.0, 1.0, m).expect("valid signal")
}

fn group(name: &str, h: SurvivorFunction, signal: SignalStructure) -> Group {
    Group::new(name, 1000.0, h, signal).expect("valid group")
}

fn ns(mu: f64) -> SurvivorFunction {
    SurvivorFunction::normal(mu, 2.0).expect("valid survivor")
}

/// Identical unit-separation normal signals; group 2 is riskier.
pub fn scenario_a() -> Scenario {
    Scenario::new(
        [group("g1", ns(0.0), normal_signal(1.0)), group("g2", ns(2.0), normal_signal(1.0))],
        None,
    )
    .expect("valid scenario")
}

/// As A, but group 2's signal separates twice as well.
pub fn scenario_b() -> Scenario {
    scenario_a().with_signal(1, normal_signal(2.0)).expect("valid scenario")
}

/// Mirror-image two-piece normal signals: equal maximal disincentive,
/// different error-rate geometry.
pub fn scenario_c() -> Scenario {
    let base = BaseDensity::TwoPieceNormal {
        mode: 0.0,
        sigma_left: 0.5,
        sigma_right: 1.5,
    };
    let s1 = SignalStructure::new(base, 0.0, 1.0, 1.0).expect("valid signal");
    let s2 = SignalStructure::new(base.reflected(), 0.0, 1.0, 1.0).expect("valid signal");
    Scenario::new([group("g1", ns(0.0), s1), group("g2", ns(2.0), s2)], None).expect("valid scenario")
}

/// Scenario A with inspection capacity for half the population.
pub fn scenario_d() -> Scenario {
    scenario_a().with_capacity(Some(1000.0)).expect("valid scenario")
}

/// Separations 1 and 2, with group 2's outside option shifted so both
/// groups offend at the same rate under the unconstrained optimum.
pub fn scenario_e() -> Scenario {
    let s1 = normal_signal(1.0);
    let s2 = normal_signal(2.0);
    let d1 = s1.max_disincentive().expect("normal signal").upper;
    let d2 = s2.max_disincentive().expect("normal signal").upper;
    Scenario::new([group("g1", ns(0.0), s1), group("g2", ns(d2 - d1), s2)], None).expect("valid scenario")
}

/// Power-law outside options in one location family, unit-separation normal
/// signals, capacity for half the population. The equilibrium is interior.
pub fn power_pair(p: f64) -> Scenario {
    let h = |mu| SurvivorFunction::power(mu, p).expect("valid survivor");
    Scenario::new(
        [group("g1", h(-0.3), normal_signal(1.0)), group("g2", h(-0.5), normal_signal(1.0))],
        Some(1000.0),
    )
    .expect("valid scenario")
}

/// Every fixed scenario under its file stem.
pub fn canonical() -> Vec<(&'static str, Scenario)> {
    vec![
        ("scenario_a", scenario_a()),
        ("scenario_b", scenario_b()),
        ("scenario_c", scenario_c()),
        ("scenario_d", scenario_d()),
        ("scenario_e", scenario_e()),
        ("power_p2", power_pair(2.0)),
        ("power_p05", power_pair(0.5)),
        ("power_p1", power_pair(1.0)),
    ]
}

fn random_base<R: Rng>(rng: &mut R) -> BaseDensity {
    match rng.gen_range(0..4) {
        0 => BaseDensity::Normal,
        1 => BaseDensity::Logistic,
        2 => BaseDensity::Gumbel,
        _ => BaseDensity::TwoPieceNormal {
            mode: rng.gen_range(-0.5..0.5),
            sigma_left: rng.gen_range(0.4..2.0),
            sigma_right: rng.gen_range(0.4..2.0),
        },
    }
}

fn random_survivor<R: Rng>(rng: &mut R) -> SurvivorFunction {
    let mu = rng.gen_range(-0.5..1.5);
    let scale = rng.gen_range(0.5..3.0);
    if rng.gen_bool(0.5) {
        SurvivorFunction::normal(mu, scale).expect("valid survivor")
    } else {
        SurvivorFunction::logistic(mu, scale).expect("valid survivor")
    }
}

fn random_group<R: Rng>(rng: &mut R, name: &str, signal: SignalStructure) -> Group {
    let n = rng.gen_range(200.0..2000.0);
    Group::new(name, n, random_survivor(rng), signal).expect("valid group")
}

/// Random scenario where both groups share one signal structure.
pub fn random_identical_signals<R: Rng>(rng: &mut R) -> Scenario {
    let signal = SignalStructure::new(
        random_base(rng),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(0.5..2.0),
        rng.gen_range(0.3..3.0),
    )
    .expect("valid signal");
    let g1 = random_group(rng, "g1", signal);
    let g2 = random_group(rng, "g2", signal);
    Scenario::new([g1, g2], None).expect("valid scenario")
}

/// Random scenario whose groups share a base family but differ in location,
/// scale and crime shift, with separations at least 0.2 apart.
pub fn random_location_scale<R: Rng>(rng: &mut R) -> Scenario {
    let base = random_base(rng);
    let sep1 = rng.gen_range(0.4..2.5);
    let sep2 = loop {
        let s: f64 = rng.gen_range(0.4..2.5);
        if (s - sep1).abs() >= 0.2 {
            break s;
        }
    };
    let mut signal = |sep: f64| {
        let sigma = rng.gen_range(0.5..2.0);
        SignalStructure::new(base, rng.gen_range(-1.0..1.0), sigma, sep * sigma).expect("valid signal")
    };
    let s1 = signal(sep1);
    let s2 = signal(sep2);
    let g1 = random_group(rng, "g1", s1);
    let g2 = random_group(rng, "g2", s2);
    Scenario::new([g1, g2], None).expect("valid scenario")
}
