//! Check every spec of a script in both modes and compare with the oracle.
//!
//! `cargo run --example check_script -- tests/fixtures/one_time_pad.epv`

use epiveri::checker::{check, CheckOptions, Mode};
use epiveri::script::load_system;
use epiveri::semantics::oracle_check;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/dining_cryptographers.epv").into());
    let sys = load_system(&std::fs::read_to_string(&path).unwrap()).unwrap_or_else(|e| panic!("{path}:{e}"));
    for spec in &sys.specs {
        println!("{} (time {})", spec.name, spec.time);
        println!("  {}", sys.format_formula(&spec.formula));
        for mode in [Mode::Optimized, Mode::Baseline] {
            let v = check(&sys, spec, &CheckOptions::new(mode)).unwrap();
            println!(
                "  {:<9} holds={} kept={} of {} vertices",
                mode.name(),
                v.holds,
                v.stats.kappa,
                v.stats.total_nodes
            );
        }
        match oracle_check(&sys, spec) {
            Ok(v) => println!("  oracle    holds={} over {} worlds", v.holds, v.worlds),
            Err(e) => println!("  oracle    {e}"),
        }
    }
}
