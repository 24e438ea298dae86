mod common;

use epiveri::checker::{check, CheckOptions, Mode, VarOrder};
use epiveri::epistemic::models;
use epiveri::logic::Formula;
use epiveri::script::{load_system, CheckedSpec, CheckedSystem};
use epiveri::semantics::{oracle_check, oracle_check_with, oracle_evs, timed_name, OracleOptions, DEFAULT_BRANCH_CAP};

fn timed_formula(sys: &CheckedSystem, spec: &CheckedSpec) -> Formula<String> {
    spec.formula.map_atoms(&mut |v| timed_name(sys, *v, spec.time))
}

fn verdicts(sys: &CheckedSystem, spec: &CheckedSpec) -> [bool; 3] {
    let opt = check(sys, spec, &CheckOptions::new(Mode::Optimized)).unwrap();
    let base = check(sys, spec, &CheckOptions::new(Mode::Baseline)).unwrap();
    let oracle = oracle_check(sys, spec).unwrap();
    assert!(opt.stats.bdd_vars <= base.stats.bdd_vars);
    assert_eq!(opt.holds, opt.counterexample.is_none());
    [opt.holds, base.holds, oracle.holds]
}

#[test]
fn random_scripts_load() {
    let mut r = common::rng(1);
    for _ in 0..300 {
        let text = common::random_script(&mut r);
        load_system(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    }
}

#[test]
fn checkers_agree_with_unreduced_structure() {
    let mut r = common::rng(2);
    let (mut checked, mut held) = (0, 0);
    while checked < 250 {
        let text = common::random_script(&mut r);
        let sys = load_system(&text).unwrap();
        let spec = &sys.specs[0];
        if oracle_check(&sys, spec).is_err() {
            // unsatisfiable init; the checker must say so too
            assert!(check(&sys, spec, &CheckOptions::new(Mode::Optimized)).is_err(), "{text}");
            continue;
        }
        let v = verdicts(&sys, spec);
        let evs = oracle_evs(&sys, spec.time, DEFAULT_BRANCH_CAP).unwrap();
        let direct = models(&evs, &timed_formula(&sys, spec)).unwrap();
        assert!(v.iter().all(|b| *b == direct), "{v:?} vs {direct}\n{text}");
        checked += 1;
        held += direct as usize;
    }
    // both verdicts occur often enough to be meaningful
    assert!(held > 25 && held < 225, "{held}");
}

#[test]
fn oracle_pruning_and_var_order_do_not_change_verdicts() {
    let mut r = common::rng(3);
    for _ in 0..100 {
        let text = common::random_script(&mut r);
        let sys = load_system(&text).unwrap();
        let spec = &sys.specs[0];
        let unpruned = OracleOptions {
            prune_dead_inits: false,
            ..OracleOptions::default()
        };
        let Ok(a) = oracle_check_with(&sys, &spec.formula, spec.time, &unpruned) else {
            continue;
        };
        assert_eq!(a.holds, oracle_check(&sys, spec).unwrap().holds, "{text}");
        let mut opts = CheckOptions::new(Mode::Optimized);
        opts.order = VarOrder::Creation;
        assert_eq!(check(&sys, spec, &opts).unwrap().holds, a.holds, "{text}");
    }
}
