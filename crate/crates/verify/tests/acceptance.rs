//! Every reproduction criterion at its stated tolerance, one line each.
//!
//! Lives in its own package so that it runs after the unit and property
//! tests of the other crates.

use std::io::Write;
use std::path::Path;

use feegame::acceptance::{run_acceptance, AcceptanceOptions};
use feegame::equilibrium::PolicyKind;
use feegame::experiment::{presets, Runner};
use feegame::simulator::Estimate;

// bypasses the test harness's capture so the table is always shown
fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

#[test]
fn acceptance_criteria() {
    let root = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let opts = AcceptanceOptions::new(&root);
    say("acceptance criteria:");
    let results = run_acceptance(&opts, &mut |c| {
        say(&format!(
            "  {}  {}  ({})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    });
    let failed: Vec<&str> = results.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    say(&format!("{} passed, {} failed", results.len() - failed.len(), failed.len()));
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

// Halving dt should move the duopoly table statistics by less than one
// standard error of the base run.
#[test]
fn halving_dt_keeps_duopoly_table_within_one_standard_error() {
    let root = Path::new(env!("CARGO_TARGET_TMPDIR")).join("dt_halving");
    let run = |dt: f64| {
        let mut cfg = presets::table1_k2();
        cfg.name = format!("dt_{}", (1.0 / dt).round());
        cfg.dt = dt;
        cfg.n_paths = 20_000;
        cfg.policies = vec![PolicyKind::Equilibrium];
        cfg.monopoly_benchmark = false;
        let report = Runner::new(cfg, &root).unwrap().table().unwrap();
        report.competition(PolicyKind::Equilibrium).unwrap().venues[0]
    };
    let coarse = run(1e-3);
    let fine = run(5e-4);
    let stats: [(&str, Estimate, Estimate); 4] = [
        ("fees", coarse.fees, fine.fees),
        ("sell", coarse.sell, fine.sell),
        ("buy", coarse.buy, fine.buy),
        ("vol", coarse.volume, fine.volume),
    ];
    let mut worst: Vec<String> = Vec::new();
    for (name, a, b) in stats {
        let z = (b.mean - a.mean).abs() / a.stderr;
        say(&format!(
            "  dt halving {name}: {:.4} -> {:.4} (s.e. {:.4}, {z:.2} s.e.)",
            a.mean, b.mean, a.stderr
        ));
        if z >= 1.0 {
            worst.push(format!("{name} moved {z:.2} s.e."));
        }
    }
    assert!(worst.is_empty(), "{worst:?}");
}
