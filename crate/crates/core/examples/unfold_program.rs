//! Unfold the dining cryptographers into a structured model and show the
//! relevant set the checker keeps.

use epiveri::bench::{generate_system, Family};
use epiveri::checker::{analyze, Mode};
use epiveri::unfold::relation_text;

fn main() {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let sys = generate_system(Family::Dc, n).unwrap();
    let spec = &sys.specs[0];
    let a = analyze(&sys, &spec.formula, spec.time, Mode::Optimized).unwrap();
    let u = &a.unfolding;
    println!("{} vertices, {} copies aliased", a.total_nodes, u.aliased);
    println!("kept:    {:?}", a.kappa_names());
    println!("removed: {:?}", a.removed_names());
    println!("remaining relations:");
    for v in u.model.dag.sorted_by_name(u.model.dag.vertices()) {
        println!("  {:<18} {}", u.model.dag.name(v), relation_text(u, v));
    }
}
