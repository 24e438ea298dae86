mod common;

use epiveri::bench::{generate_system, generate_twophase, Family};
use epiveri::checker::{check, CheckOptions, Mode};
use epiveri::script::load_system;
use epiveri::semantics::{generate_runs, oracle_check, DEFAULT_BRANCH_CAP};

fn agree(family: Family, n: usize) {
    let sys = generate_system(family, n).unwrap();
    agree_sys(&sys, &format!("{} {n}", family.name()));
}

fn agree_sys(sys: &epiveri::script::CheckedSystem, what: &str) {
    for spec in &sys.specs {
        let opt = check(sys, spec, &CheckOptions::new(Mode::Optimized)).unwrap();
        let base = check(sys, spec, &CheckOptions::new(Mode::Baseline)).unwrap();
        let oracle = oracle_check(sys, spec).unwrap();
        assert_eq!(opt.holds, oracle.holds, "{what} {}", spec.name);
        assert_eq!(base.holds, oracle.holds, "{what} {}", spec.name);
    }
}

#[test]
fn dining_cryptographers() {
    for n in 3..=5 {
        agree(Family::Dc, n);
    }
}

#[test]
fn one_time_pad() {
    for n in 1..=3 {
        agree(Family::Otp, n);
    }
}

#[test]
fn oblivious_transfer() {
    for n in 1..=3 {
        agree(Family::Ot, n);
    }
}

#[test]
fn message_transmission() {
    for n in 3..=5 {
        agree(Family::Msg, n);
    }
}

#[test]
fn two_phase_fixture_size() {
    agree_sys(&load_system(&generate_twophase(3, 3).unwrap()).unwrap(), "twophase 3");
}

#[test]
fn fixture_verdicts() {
    let expect = [
        ("dining_cryptographers", vec![true]),
        ("one_time_pad", vec![true]),
        ("message_transmission", vec![true]),
        ("two_phase", vec![true]),
        ("oblivious_transfer", vec![true, false, true]),
    ];
    for (name, verdicts) in expect {
        let sys = load_system(&common::fixture(name)).unwrap();
        let got: Vec<bool> = sys
            .specs
            .iter()
            .map(|s| check(&sys, s, &CheckOptions::new(Mode::Optimized)).unwrap().holds)
            .collect();
        assert_eq!(got, verdicts, "{name}");
    }
}

#[test]
fn run_counts() {
    // 4 admissible payer assignments times 2^12 free initial bits
    let dc = load_system(&common::fixture("dining_cryptographers")).unwrap();
    assert_eq!(generate_runs(&dc, 3, DEFAULT_BRANCH_CAP).unwrap().len(), 16384);
    // 2 pad bits, 2 message bits, channel and bit: 2^6
    let otp = generate_system(Family::Otp, 2).unwrap();
    assert_eq!(generate_runs(&otp, 4, DEFAULT_BRANCH_CAP).unwrap().len(), 64);
}

#[test]
fn dc_reduction_statistics() {
    let sys = generate_system(Family::Dc, 3).unwrap();
    let opt = check(&sys, &sys.specs[0], &CheckOptions::new(Mode::Optimized)).unwrap();
    let s = &opt.stats;
    assert_eq!((s.total_nodes, s.kappa, s.leaf_removed, s.quantified), (19, 7, 10, 2));
    assert_eq!((s.reduced_vertices, s.reduced_vertices_without_init), (9, 8));
    assert_eq!(s.leaf_removed + s.kappa + s.quantified, s.total_nodes);
    let base = check(&sys, &sys.specs[0], &CheckOptions::new(Mode::Baseline)).unwrap();
    assert_eq!(base.stats.kappa, 12);
    assert!(opt.stats.bdd_vars <= base.stats.bdd_vars);
}
