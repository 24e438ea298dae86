mod common;

use std::process::{Command, Output};

fn epiveri(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epiveri")).args(args).output().unwrap()
}

fn fixture_path(name: &str) -> String {
    format!("{}/tests/fixtures/{name}.epv", env!("CARGO_MANIFEST_DIR"))
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_reports_holds_and_exit_zero() {
    let o = epiveri(&["check", &fixture_path("dining_cryptographers")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("spec_spr_ci: HOLDS"));
}

#[test]
fn failing_spec_exits_one_with_counterexample() {
    let o = epiveri(&["check", &fixture_path("oblivious_transfer"), "--spec", "Single", "--algo", "baseline"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("FAILS") && out.contains("counterexample"));
}

#[test]
fn json_output_has_stats() {
    let o = epiveri(&["check", &fixture_path("one_time_pad"), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let first = &v[0];
    assert_eq!(first["holds"], true);
    assert_eq!(first["mode"], "optimized");
    for key in ["total_nodes", "kappa", "leaf_removed", "quantified", "bdd_vars", "timings"] {
        assert!(first["stats"].get(key).is_some(), "{key}");
    }
}

#[test]
fn diagnostics_carry_file_line_col() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.epv");
    std::fs::write(&p, "x : Bool\n\nspec_spr = X 0 y\n").unwrap();
    let o = epiveri(&["check", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.starts_with(&format!("{}:3:", p.display())), "{err}");
    assert!(err.contains("unbound variable `y`"));
}

#[test]
fn oracle_subcommand() {
    let o = epiveri(&["oracle", &fixture_path("message_transmission")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("HOLDS"));
}

#[test]
fn graph_stages_and_dot_files() {
    let p = fixture_path("dining_cryptographers");
    for stage in ["unfolded", "moralized", "reduced"] {
        let o = epiveri(&["graph", &p, "--stage", stage]);
        assert_eq!(o.status.code(), Some(0));
        let out = stdout(&o);
        assert!(out.starts_with("digraph") || out.starts_with("graph"), "{stage}");
    }
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("dc");
    let o = epiveri(&["check", &p, "--dot", prefix.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for stage in ["unfolded", "moralized", "reduced"] {
        assert!(dir.path().join(format!("dc.{stage}.dot")).exists());
    }
}

#[test]
fn gen_round_trips_through_check() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("otp.epv");
    let o = epiveri(&["gen", "--family", "otp", "--size", "4", "-o", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(epiveri(&["check", p.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(epiveri(&["gen", "--family", "dc", "--size", "2"]).status.code(), Some(2));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("out.csv");
    let o = epiveri(&[
        "bench", "--family", "msg", "--sizes", "1..3", "--algo", "baseline", "--reps", "1", "--csv",
        p.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("family,size,algo,run,seconds,verdict,kept_vars,total_vars"));
    assert_eq!(lines.filter(|l| l.contains(",holds,")).count(), 3);
}

#[test]
fn unknown_spec_and_bad_args() {
    let o = epiveri(&["check", &fixture_path("one_time_pad"), "--spec", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(epiveri(&["bench", "--family", "zz", "--sizes", "1..2"]).status.code(), Some(2));
}
