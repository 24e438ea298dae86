//! Kripke structures, their variable-structure encoding and a check that
//! the two are bisimilar.

use std::collections::BTreeSet;

use epiveri::epistemic::{is_bisimulation, ks_of, models, vs_of, vs_world, EpistemicModel, Evs, KripkeStructure};
use epiveri::logic::Formula;

fn main() {
    // Three worlds; agent 0 cannot tell world 0 from world 1.
    let ks = KripkeStructure::new(
        vec!["p".into(), "q".into()],
        vec![vec![true, false], vec![true, true], vec![false, true]],
        vec![vec![0, 0, 1]],
    );
    let p = Formula::Atom("p".to_string());
    let q = Formula::Atom("q".to_string());
    let k = |f| Formula::knows(0, f);
    println!("K p holds everywhere: {}", models(&ks, &Formula::bin(epiveri::logic::BinOp::Implies, p.clone(), k(p.clone()))).unwrap());
    println!("K q holds everywhere: {}", models(&ks, &Formula::bin(epiveri::logic::BinOp::Implies, q.clone(), k(q))).unwrap());

    let evs = vs_of(&ks);
    println!("encoded as {} worlds over {:?}", evs.num_worlds(), evs.vars());
    let r: Vec<(usize, usize)> = (0..ks.num_worlds()).map(|w| (w, vs_world(&evs, w))).collect();
    println!("bisimilar on p,q: {}", is_bisimulation(&ks, &evs, &r, &["p".into(), "q".into()]).unwrap());

    // And back: the structure induced by an EVS.
    let e = Evs::new(
        vec!["a".into(), "b".into()],
        vec![vec![false, false], vec![false, true], vec![true, true]],
        vec![BTreeSet::from([0])],
    );
    let back = ks_of(&e);
    println!("ks_of: {} worlds, 0~1 for agent 0: {}", back.num_worlds(), back.related(0, 0, 1));
}
