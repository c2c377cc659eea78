//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Everything is exact; there are no tolerances anywhere.

use dgla_lab::commands;

fn run(name: &str, checks: dgla_lab::check::CheckList) {
    for c in &checks.items {
        println!(
            "[{}] {} ... {}",
            name,
            c.name,
            if c.passed { "pass" } else { "FAIL" }
        );
    }
    if let Some(f) = checks.first_failure() {
        panic!(
            "criterion {} failed at `{}`: {}",
            name,
            f.name,
            f.witness.clone().unwrap_or_default()
        );
    }
    println!("criterion {name}: pass");
}

#[test]
fn criterion_01_axiom_suites() {
    run("1 axioms", commands::criterion_1_axioms().unwrap());
}

#[test]
fn criterion_02_integration_formulas() {
    run("2 integration", commands::criterion_2_integration());
}

#[test]
fn criterion_03_iterated_integrals() {
    run("3 iterated integrals", commands::criterion_3_iterated_integrals(0));
}

#[test]
fn criterion_04_tw_round_trips() {
    run("4 TW round trips", commands::criterion_4_tw_round_trips().unwrap());
}

#[test]
fn criterion_05_jacobian_double_fiber() {
    run("5 Jacobian double fiber", commands::criterion_5_jacobian(0).unwrap());
}

#[test]
fn criterion_06_gauge_theory() {
    run("6 gauge theory", commands::criterion_6_gauge(0, 5000).unwrap());
}

#[test]
fn criterion_07_obstructed_grassmannian() {
    run("7 obstructed Grassmannian", commands::criterion_7_obstructed_grassmannian().unwrap());
}

#[test]
fn criterion_08_period_obstruction_annihilation() {
    run("8 period obstructions", commands::criterion_8_period_obstruction().unwrap());
}

#[test]
fn criterion_09_cube_commutativity() {
    run("9 cube", commands::criterion_9_cube().unwrap());
}

#[test]
fn criterion_10_ainf_relation_exhaustive() {
    run("10 A-infinity relation", commands::criterion_10_ainf(3, 4).unwrap());
}

#[test]
fn criterion_11_pipeline_consistency() {
    run("11 pipeline", commands::criterion_11_pipeline().unwrap());
}

/// Criterion 12: two runs of `selftest --seed 0 --format machine` produce
/// byte-identical reports, through the actual binary.
#[test]
fn criterion_12_determinism() {
    let exe = env!("CARGO_BIN_EXE_dgla-lab");
    let run_once = || {
        let out = std::process::Command::new(exe)
            .args(["selftest", "--seed", "0", "--format", "machine"])
            .output()
            .expect("selftest run");
        assert!(out.status.success(), "selftest exited nonzero");
        out.stdout
    };
    let first = run_once();
    let second = run_once();
    assert!(!first.is_empty());
    assert_eq!(first, second, "selftest reports differ between runs");
    println!("criterion 12 determinism: pass ({} bytes)", first.len());
}
