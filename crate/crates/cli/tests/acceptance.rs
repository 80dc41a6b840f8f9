//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{bisect, normal_survivor, phi, phi_inv};
use crimefair::inspection::{first_best, intensity_extremality_check, second_best, Curvature};
use crimefair::optimize::{
    crime_equalization_epsilon, crime_parity_epsilon, error_parity_condition, max_disincentives, reflect_threshold,
    solve_fair, solve_unconstrained,
};
use crimefair::oracle::grid::grid_best_fair;
use crimefair::oracle::monte_carlo::{four_sigma, monte_carlo};
use crimefair::policy::{group_metrics, posterior_thresholds};
use crimefair::{scenarios, BaseDensity, FairnessNotion, Scenario, SignalStructure, ThresholdPolicy};
use crimefair_cli::scenario_file::ScenarioDoc;

#[derive(Default)]
struct Check {
    failures: Vec<String>,
    facts: Vec<String>,
}

impl Check {
    fn ensure(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn fact(&mut self, s: impl Into<String>) {
        self.facts.push(s.into());
    }
}

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn identical_signals_equalize_error_rates() -> Check {
    let mut c = Check::default();
    let mut rng = seeded(101);
    let mut cases = vec![("scenario_a".to_string(), scenarios::scenario_a())];
    for i in 0..20 {
        cases.push((format!("random #{i}"), scenarios::random_identical_signals(&mut rng)));
    }
    for (name, s) in &cases {
        let opt = match solve_unconstrained(s) {
            Ok(o) => o,
            Err(e) => {
                c.ensure(false, || format!("{name}: {e}"));
                continue;
            }
        };
        let [m1, m2] = group_metrics(s, &opt.policy);
        c.ensure((m1.fpr - m2.fpr).abs() <= 1e-9, || format!("{name}: FPR gap {}", (m1.fpr - m2.fpr).abs()));
        c.ensure((m1.fnr - m2.fnr).abs() <= 1e-9, || format!("{name}: FNR gap {}", (m1.fnr - m2.fnr).abs()));
        for n in [FairnessNotion::Fpr, FairnessNotion::Fnr, FairnessNotion::Delta] {
            match solve_fair(s, n) {
                Ok(sol) => {
                    let gap = (sol.crime - opt.crime).abs();
                    c.ensure(gap <= 1e-9, || format!("{name}: {n} crime gap {gap:e}"));
                }
                Err(e) => c.ensure(false, || format!("{name}: {n}: {e}")),
            }
        }
    }
    c.fact(format!("{} scenarios", cases.len()));
    c
}

fn baseline_numerics() -> Check {
    let mut c = Check::default();
    let a = scenarios::scenario_a();
    let opt = solve_unconstrained(&a).unwrap();
    for t in opt.policy.thresholds {
        c.ensure((t - 0.5).abs() <= 1e-9, || format!("optimum threshold {t}"));
    }
    let want_delta = 2.0 * phi(0.5) - 1.0;
    let [d1, d2] = max_disincentives(&a).unwrap();
    for d in [d1, d2] {
        c.ensure((d - want_delta).abs() <= 1e-6, || format!("Δ̄ {d} vs oracle {want_delta}"));
    }
    let want_crime = 1000.0 * (normal_survivor(want_delta, 0.0, 2.0) + normal_survivor(want_delta, 2.0, 2.0));
    c.ensure((opt.crime - want_crime).abs() <= 0.01, || format!("crime {} vs oracle {want_crime}", opt.crime));
    c.ensure((opt.crime - 1214.70).abs() <= 0.01, || format!("crime {} vs 1214.70", opt.crime));
    c.fact(format!("crime {:.6}, Δ̄ {:.9}", opt.crime, d1));
    c
}

fn posterior_thresholds_track_crime_rates() -> Check {
    let mut c = Check::default();
    let a = scenarios::scenario_a();
    let opt = solve_unconstrained(&a).unwrap();
    let m = group_metrics(&a, &opt.policy);
    let post = posterior_thresholds(&a, &opt.policy);
    for g in 0..2 {
        let gap = (post[g] - m[g].crime_rate).abs();
        c.ensure(gap <= 1e-9, || format!("group {}: |π − CR| = {gap:e}", g + 1));
    }
    let gap = (post[0] - post[1]).abs();
    c.ensure(gap > 0.3, || format!("posterior gap {gap}"));
    c.fact(format!("π = ({:.6}, {:.6})", post[0], post[1]));
    c
}

fn capacity_variants() -> Vec<(String, Scenario)> {
    use rand::Rng;
    let mut rng = seeded(404);
    let d = scenarios::scenario_d();
    let mut out = vec![("scenario_d".to_string(), d.clone())];
    for i in 0..10 {
        let cap: f64 = rng.gen_range(200.0..1800.0);
        out.push((format!("capacity {cap:.1} (#{i})"), d.with_capacity(Some(cap)).unwrap()));
    }
    out
}

fn inspection_thresholds_coincide() -> Check {
    let mut c = Check::default();
    let cases = capacity_variants();
    let mut solved = 0;
    for (name, s) in &cases {
        let (fb, sb) = match (first_best(s), second_best(s)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                c.ensure(false, || format!("{name}: {e}"));
                continue;
            }
        };
        solved += 1;
        for g in 0..2 {
            let gap = (fb.policy.thresholds[g] - sb.policy.thresholds[g]).abs();
            c.ensure(gap <= 1e-10, || format!("{name}: threshold gap {gap:e}"));
        }
        for sol in [&fb, &sb] {
            let [r1, r2] = sol.conditional_metrics;
            c.ensure((r1.ctpr - r2.ctpr).abs() <= 1e-9, || format!("{name}: CTPR gap"));
            c.ensure((r1.cfpr - r2.cfpr).abs() <= 1e-9, || format!("{name}: CFPR gap"));
        }
    }
    c.fact(format!("{solved}/{} scenarios with both solutions", cases.len()));
    c
}

fn equilibrium_extremality() -> Check {
    let mut c = Check::default();
    for (p, want) in [(2.0, Curvature::Convex), (0.5, Curvature::Concave), (1.0, Curvature::Linear)] {
        match intensity_extremality_check(&scenarios::power_pair(p)) {
            Ok(r) => {
                c.ensure(r.curvature == want, || format!("p={p}: curvature {:?}", r.curvature));
                let ok = match want {
                    Curvature::Convex => r.attains_min,
                    Curvature::Concave => r.attains_max,
                    Curvature::Linear => {
                        (r.grid_max - r.grid_min) <= r.grid_tolerance && r.attains_min && r.attains_max
                    }
                };
                c.ensure(ok, || {
                    format!(
                        "p={p}: equilibrium crime {} vs grid [{}, {}] ± {}",
                        r.equilibrium_crime, r.grid_min, r.grid_max, r.grid_tolerance
                    )
                });
            }
            Err(e) => c.ensure(false, || format!("p={p}: {e}")),
        }
    }
    c
}

fn error_parity_beats_delta_parity() -> Check {
    let mut c = Check::default();
    let b = scenarios::scenario_b();
    let opt = solve_unconstrained(&b).unwrap().crime;
    let fpr = solve_fair(&b, FairnessNotion::Fpr).unwrap().crime;
    let fnr = solve_fair(&b, FairnessNotion::Fnr).unwrap().crime;
    let delta = solve_fair(&b, FairnessNotion::Delta).unwrap().crime;
    c.ensure(fpr - opt > 1e-6, || format!("OPT {opt} vs FPR {fpr}"));
    c.ensure(fnr - opt > 1e-6, || format!("OPT {opt} vs FNR {fnr}"));
    c.ensure((fpr - fnr).abs() <= 1e-8, || format!("FPR {fpr} vs FNR {fnr}"));
    c.ensure(delta - fpr > 1e-6 && delta - fnr > 1e-6, || format!("FPR {fpr} vs Delta {delta}"));
    c.ensure(error_parity_condition(&b) == Ok(true), || "condition is not true on scenario B".into());
    let mut rng = seeded(606);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 20 && attempts < 200 {
        attempts += 1;
        let s = scenarios::random_location_scale(&mut rng);
        let Ok(cond) = error_parity_condition(&s) else { continue };
        checked += 1;
        let solve = |n| solve_fair(&s, n).map(|x| x.crime);
        match (solve(FairnessNotion::Fpr), solve(FairnessNotion::Fnr), solve(FairnessNotion::Delta)) {
            (Ok(f), Ok(g), Ok(d)) => {
                c.ensure(cond == (f <= d + 1e-8), || format!("random #{attempts}: condition {cond}, FPR {f}, Delta {d}"));
                c.ensure(cond == (g <= d + 1e-8), || format!("random #{attempts}: condition {cond}, FNR {g}, Delta {d}"));
            }
            _ => c.ensure(false, || format!("random #{attempts}: a solver failed")),
        }
    }
    c.ensure(checked == 20, || format!("only {checked} heterogeneous scenarios generated"));
    c.fact(format!("OPT {opt:.4} < FPR {fpr:.4} = FNR {fnr:.4} < Delta {delta:.4}"));
    c
}

fn symmetric_reflection() -> Check {
    let mut c = Check::default();
    let b = scenarios::scenario_b();
    let logistic = |m: f64| SignalStructure::new(BaseDensity::Logistic, 0.3, 0.8, m).unwrap();
    let lb = b.with_signal(0, logistic(0.9)).unwrap().with_signal(1, logistic(1.7)).unwrap();
    for (name, s) in [("scenario_b", b), ("logistic pair", lb)] {
        let (fpr, fnr) = match (solve_fair(&s, FairnessNotion::Fpr), solve_fair(&s, FairnessNotion::Fnr)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                c.ensure(false, || format!("{name}: solver failed"));
                continue;
            }
        };
        let gap = (fpr.crime - fnr.crime).abs();
        c.ensure(gap <= 1e-8, || format!("{name}: crime gap {gap:e}"));
        let sig = s.signals();
        let reflected = [0, 1].map(|g| reflect_threshold(sig[g], fpr.policy.thresholds[g]).unwrap());
        let before = group_metrics(&s, &fpr.policy);
        let after = group_metrics(&s, &ThresholdPolicy { thresholds: reflected });
        for g in 0..2 {
            let swap = (after[g].fnr - before[g].fpr).abs();
            c.ensure(swap <= 1e-9, || format!("{name}: reflected FNR differs from FPR by {swap:e}"));
            let shift = (after[g].delta - before[g].delta).abs();
            c.ensure(shift <= 1e-9, || format!("{name}: reflection moves Δ by {shift:e}"));
        }
        let reflected_crime = crimefair::policy::total_crime(&s, &ThresholdPolicy { thresholds: reflected });
        c.ensure((reflected_crime - fnr.crime).abs() <= 1e-8, || {
            format!("{name}: reflected crime {reflected_crime} vs FNR* {}", fnr.crime)
        });
    }
    c
}

fn equal_maximal_disincentives() -> Check {
    let mut c = Check::default();
    let s = scenarios::scenario_c();
    let [d1, d2] = max_disincentives(&s).unwrap();
    c.ensure((d1 - d2).abs() <= 1e-9, || format!("Δ̄ = ({d1}, {d2})"));
    let opt = solve_unconstrained(&s).unwrap();
    let m = group_metrics(&s, &opt.policy);
    c.ensure((m[0].delta - m[1].delta).abs() <= 1e-9, || "optimum does not equalize Δ".into());
    c.ensure((m[0].fpr - m[1].fpr).abs() > 0.01, || format!("FPR gap {}", (m[0].fpr - m[1].fpr).abs()));
    let fpr = solve_fair(&s, FairnessNotion::Fpr).unwrap().crime;
    let delta = solve_fair(&s, FairnessNotion::Delta).unwrap().crime;
    c.ensure((delta - opt.crime).abs() <= 1e-9, || format!("Delta {delta} vs OPT {}", opt.crime));
    c.ensure(fpr - delta > 1e-6, || format!("FPR {fpr} vs Delta {delta}"));
    c.fact(format!("FPR {fpr:.4} > Delta {delta:.4}"));
    c
}

/// Group 2's normal crime shift giving maximal disincentive `d`.
fn shift_for(d: f64) -> f64 {
    2.0 * phi_inv((1.0 + d) / 2.0)
}

fn crime_parity_threshold() -> Check {
    let mut c = Check::default();
    let a = scenarios::scenario_a();
    let eps = crime_parity_epsilon(&a).unwrap();
    let d1 = 2.0 * phi(0.5) - 1.0;
    let (c1, c2) = (normal_survivor(d1, 0.0, 2.0), normal_survivor(d1, 2.0, 2.0));
    let want = bisect(
        |e| {
            let x = normal_survivor(d1 + e, 2.0, 2.0);
            1000.0 * (x - c1) + 1000.0 * (x - c2)
        },
        0.0,
        20.0,
    );
    c.ensure((eps - want).abs() <= 1e-8, || format!("ε {eps} vs oracle {want}"));

    let e = scenarios::scenario_e();
    let [h1, h2] = e.survivors();
    let [n1, n2] = e.populations();
    let d1 = max_disincentives(&e).unwrap()[0];
    let eps_e = crime_equalization_epsilon(h1, h2, n1, n2, d1).unwrap();
    let mut winners = Vec::new();
    for offset in [-0.05, 0.05] {
        let m = shift_for(d1 + eps_e + offset);
        let s = e.with_signal(1, SignalStructure::normal(0.0, 1.0, m).unwrap()).unwrap();
        let delta = solve_fair(&s, FairnessNotion::Delta).map(|x| x.crime).unwrap_or(f64::INFINITY);
        let cr = solve_fair(&s, FairnessNotion::CrimeRate).map(|x| x.crime).unwrap_or(f64::INFINITY);
        winners.push(cr < delta);
        c.fact(format!("Δ̄_2 = Δ̄_1 + ε {offset:+}: CR {cr:.4}, Delta {delta:.4}"));
    }
    c.ensure(winners == [false, true], || format!("CR-beats-Delta flags {winners:?}, want [false, true]"));

    let opt = solve_unconstrained(&e).unwrap();
    let cr = solve_fair(&e, FairnessNotion::CrimeRate).unwrap();
    c.ensure((cr.crime - opt.crime).abs() <= 1e-9, || format!("E: CR {} vs OPT {}", cr.crime, opt.crime));
    let m = group_metrics(&e, &opt.policy);
    c.ensure((m[0].fpr - m[1].fpr).abs() > 0.01, || "E: FPR gap too small".into());
    c.fact(format!("ε = {eps:.9} (A), {eps_e:.6} (E)"));
    c
}

fn grid_oracle_agrees() -> Check {
    let mut c = Check::default();
    let mut cases: Vec<(String, Scenario)> = scenarios::canonical().into_iter().map(|(n, s)| (n.to_string(), s)).collect();
    let mut rng = seeded(1010);
    for i in 0..10 {
        cases.push((format!("random identical #{i}"), scenarios::random_identical_signals(&mut rng)));
        cases.push((format!("random location-scale #{i}"), scenarios::random_location_scale(&mut rng)));
    }
    let mut compared = 0;
    let mut both_infeasible = 0;
    for (name, s) in &cases {
        for notion in FairnessNotion::ALL {
            match (solve_fair(s, notion), grid_best_fair(s, notion, 256)) {
                (Ok(exact), Ok(grid)) => {
                    compared += 1;
                    let gap = (exact.crime - grid.solution.crime).abs();
                    c.ensure(gap <= grid.bound, || {
                        format!("{name} {notion}: solver {} grid {} (bound {})", exact.crime, grid.solution.crime, grid.bound)
                    });
                }
                (Err(_), Err(_)) => both_infeasible += 1,
                (Ok(x), Err(e)) => c.ensure(false, || format!("{name} {notion}: solver {} but grid: {e}", x.crime)),
                (Err(e), Ok(g)) => c.ensure(false, || {
                    format!("{name} {notion}: solver failed ({e}) but grid found crime {}", g.solution.crime)
                }),
            }
        }
    }
    c.fact(format!("{compared} pairs compared, {both_infeasible} infeasible for both"));
    c
}

fn monte_carlo_bands() -> Check {
    let mut c = Check::default();
    let n = 1_000_000;
    let a = scenarios::scenario_a();
    let opt = solve_unconstrained(&a).unwrap();
    let ana = group_metrics(&a, &opt.policy);
    let analytic_a = [0, 1].map(|g| [ana[g].crime_rate, ana[g].fpr, ana[g].fnr]);
    let mut runs: Vec<(&str, Scenario, ThresholdPolicy, Option<_>, [[f64; 3]; 2])> =
        vec![("scenario_a", a.clone(), opt.policy, None, analytic_a)];
    let d = scenarios::scenario_d();
    match second_best(&d) {
        Ok(sb) => {
            let r = [0, 1].map(|g| {
                let m = sb.conditional_metrics[g];
                [sb.crime_rates[g], m.cfpr, 1.0 - m.ctpr]
            });
            runs.push(("scenario_d", d.clone(), sb.policy, Some(sb.profile), r));
        }
        Err(e) => c.ensure(false, || format!("scenario_d: second-best intensities unavailable: {e}")),
    }
    for (name, s, policy, profile, analytic) in &runs {
        let mut excursions = [[0usize; 3]; 2];
        for seed in 0..10u64 {
            let emp = monte_carlo(s, policy, n, seed, profile.as_ref()).unwrap();
            for g in 0..2 {
                let e = &emp[g];
                let observed = [e.crime_rate, e.fpr.unwrap_or(f64::NAN), e.fnr.unwrap_or(f64::NAN)];
                let sizes = [e.n, e.counts.inspected_innocents(), e.counts.inspected_criminals()];
                for k in 0..3 {
                    let p = analytic[g][k];
                    if !((observed[k] - p).abs() <= four_sigma(p, sizes[k])) {
                        excursions[g][k] += 1;
                    }
                }
            }
        }
        for g in 0..2 {
            for (k, metric) in ["CR", "FPR", "FNR"].iter().enumerate() {
                let x = excursions[g][k];
                c.ensure(x <= 1, || format!("{name} group {} {metric}: {x} excursions beyond 4σ", g + 1));
            }
        }
        c.fact(format!("{name}: excursions {excursions:?}"));
    }
    c
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_crimefair")).args(args).output().expect("binary runs")
}

fn cli_contract() -> Check {
    let mut c = Check::default();
    let dir = workspace_root().join("scenarios");
    for (name, s) in scenarios::canonical() {
        let path = dir.join(format!("{name}.json"));
        let text = std::fs::read_to_string(&path).unwrap_or_default();
        c.ensure(text == ScenarioDoc::from_scenario(&s).to_json(), || format!("{name}.json is out of date"));
        let out = cli(&["verify", path.to_str().unwrap()]);
        c.ensure(out.status.code() == Some(0), || {
            format!("verify {name}: exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
        });
    }

    let tmp = tempfile::tempdir().unwrap();
    let a_text = ScenarioDoc::from_scenario(&scenarios::scenario_a()).to_json();
    let d_text = ScenarioDoc::from_scenario(&scenarios::scenario_d()).to_json();
    let corrupt = [
        ("missing.json", None, 2),
        ("truncated.json", Some(a_text[..a_text.len() / 2].to_string()), 3),
        ("unknown_family.json", Some(a_text.replacen("\"normal\"", "\"cauchy\"", 1)), 3),
        ("zero_sigma.json", Some(a_text.replacen("\"sigma\": 1.0", "\"sigma\": 0.0", 1)), 4),
        ("over_capacity.json", Some(d_text.replace("\"capacity\": 1000.0", "\"capacity\": 2500.0")), 4),
    ];
    for (file, contents, want) in corrupt {
        let path = tmp.path().join(file);
        if let Some(text) = contents {
            std::fs::write(&path, text).unwrap();
        }
        let out = cli(&["solve", path.to_str().unwrap()]);
        c.ensure(out.status.code() == Some(want), || format!("{file}: exit {:?}, want {want}", out.status.code()));
    }
    let a_path = tmp.path().join("a.json");
    std::fs::write(&a_path, &a_text).unwrap();
    let out = cli(&["fair", a_path.to_str().unwrap(), "--notion", "cr"]);
    c.ensure(out.status.code() == Some(5), || format!("infeasible notion: exit {:?}, want 5", out.status.code()));

    let mut csvs = Vec::new();
    for run in 0..2 {
        let out_path = tmp.path().join(format!("sweep{run}.csv"));
        let out = cli(&[
            "sweep",
            dir.join("scenario_b.json").to_str().unwrap(),
            "--param",
            "groups.1.signal.crime_shift",
            "--from",
            "0.5",
            "--to",
            "3.0",
            "--steps",
            "26",
            "--out",
            out_path.to_str().unwrap(),
            "--notion",
            "fpr",
        ]);
        c.ensure(out.status.success(), || format!("sweep run {run} failed: {}", String::from_utf8_lossy(&out.stderr)));
        csvs.push(std::fs::read(&out_path).unwrap_or_default());
    }
    c.ensure(!csvs[0].is_empty() && csvs[0] == csvs[1], || "sweep output differs between runs".into());
    c
}

type Criterion = (u32, &'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "identical signals: optimum equalizes error rates, parity is free", identical_signals_equalize_error_rates),
        (2, "baseline numerics of scenario A", baseline_numerics),
        (3, "posterior thresholds equal crime rates and differ across groups", posterior_thresholds_track_crime_rates),
        (4, "first- and second-best inspection thresholds coincide", inspection_thresholds_coincide),
        (5, "equilibrium intensities are extremal by curvature", equilibrium_extremality),
        (6, "error-rate parity beats disincentive parity", error_parity_beats_delta_parity),
        (7, "symmetric bases: FPR and FNR parity mirror each other", symmetric_reflection),
        (8, "equal maximal disincentives: optimum equalizes Δ", equal_maximal_disincentives),
        (9, "crime-rate parity threshold ε and the winner flip", crime_parity_threshold),
        (10, "solver matches the grid oracle", grid_oracle_agrees),
        (11, "Monte Carlo within 4σ bands", monte_carlo_bands),
        (12, "CLI contract", cli_contract),
    ];
    let mut failed = 0;
    for (id, title, run) in criteria {
        let start = Instant::now();
        let check = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Check {
                failures: vec![format!("panicked: {msg}")],
                facts: Vec::new(),
            }
        });
        let secs = start.elapsed().as_secs_f64();
        let status = if check.failures.is_empty() { "PASS" } else { "FAIL" };
        let facts = if check.facts.is_empty() {
            String::new()
        } else {
            format!(" [{}]", check.facts.join("; "))
        };
        println!("{status} criterion {id:>2}: {title} ({secs:.1}s){facts}");
        for f in check.failures.iter().take(8) {
            println!("       {f}");
        }
        if check.failures.len() > 8 {
            println!("       ... {} more", check.failures.len() - 8);
        }
        if !check.failures.is_empty() {
            failed += 1;
        }
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
