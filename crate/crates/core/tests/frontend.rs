use std::collections::BTreeSet;

use epiveri::script::{check_script, formula_vars, load_system, parse_script};

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/{name}.epv", env!("CARGO_MANIFEST_DIR")))
        .unwrap()
}

const ALL: [&str; 5] = [
    "dining_cryptographers",
    "one_time_pad",
    "oblivious_transfer",
    "message_transmission",
    "two_phase",
];

#[test]
fn fixture_scripts_parse_and_check() {
    for name in ALL {
        let text = fixture(name);
        let sys = load_system(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!sys.specs.is_empty(), "{name}");
    }
}

#[test]
fn dining_cryptographers_shape() {
    let script = parse_script(&fixture("dining_cryptographers")).unwrap();
    assert_eq!(script.agents.len(), 3);
    assert_eq!(script.protocols.len(), 1);
    assert_eq!(script.specs.len(), 1);
    let sys = check_script(&script).unwrap();
    assert_eq!(sys.horizon, 4);
    let q: BTreeSet<&str> = sys.agents[0]
        .observables
        .iter()
        .map(|v| sys.var_name(*v))
        .collect();
    assert_eq!(
        q,
        BTreeSet::from([
            "paid[0]",
            "said[0]",
            "said[1]",
            "said[2]",
            "C0.coin_left",
            "C0.coin_right"
        ])
    );
}

#[test]
fn two_phase_expands_range_alias() {
    let sys = load_system(&fixture("two_phase")).unwrap();
    assert_eq!(sys.horizon, 13);
    for i in 0..4 {
        assert!(sys.var_id(&format!("slotsC0[{i}]")).is_some());
    }
    assert!(sys.var_id("slotsC0[4]").is_none());
    // the unsized formal takes its size from the bound array
    let c0 = &sys.agents[0];
    assert!(c0.observables.contains(&sys.var_id("slotsC0[3]").unwrap()));
}

#[test]
fn nested_message_spec_mentions_only_rcdb() {
    let sys = load_system(&fixture("message_transmission")).unwrap();
    let rcdb = sys.var_id("rcdB").unwrap();
    assert_eq!(formula_vars(&sys.specs[0]), BTreeSet::from([(rcdb, 4)]));
    assert_eq!(sys.specs[0].formula.knows_depth(), 5);
}

#[test]
fn oblivious_transfer_has_three_labelled_specs() {
    let sys = load_system(&fixture("oblivious_transfer")).unwrap();
    let names: Vec<&str> = sys.specs.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names.len(), 3);
    assert!(names[0].starts_with("[Any]"));
    assert!(names[1].starts_with("[Single]"));
    assert!(names[2].starts_with("[Alice]"));
}

#[test]
fn pretty_printed_fixtures_round_trip() {
    for name in ALL {
        let s = parse_script(&fixture(name)).unwrap();
        let printed = s.to_string();
        let again = parse_script(&printed).unwrap_or_else(|e| panic!("{name}: {e}\n{printed}"));
        assert_eq!(s, again, "{name}");
        assert_eq!(check_script(&s).unwrap(), check_script(&again).unwrap());
    }
}
