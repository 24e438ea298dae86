//! Join, projection and variable elimination on relational structures,
//! plus the conditional-independence test.

use std::collections::BTreeSet;

use epiveri::relational::{check_ci, combine, combine_all, elimination_order, fusion_marginal, marginalize, RelationalStructure};

fn set(v: &[&str]) -> BTreeSet<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn main() {
    // A chain x -> y -> z where y copies x and z copies y.
    let x = RelationalStructure::boolean(&["x"], &[&[false], &[true]]);
    let xy = RelationalStructure::boolean(&["x", "y"], &[&[false, false], &[true, true]]);
    let yz = RelationalStructure::boolean(&["y", "z"], &[&[false, false], &[true, true]]);
    let joint = combine_all([&x, &xy, &yz]).unwrap();
    println!("joint over {:?}: {} rows", joint.vars(), joint.len());

    let xz = marginalize(&joint, &set(&["x", "z"]));
    println!("projection on x,z: {:?}", xz.rows());

    let members = vec![x.clone(), xy.clone(), yz.clone()];
    let domains: Vec<_> = members.iter().map(|r| r.domain()).collect();
    let order = elimination_order(&domains, &set(&["x", "z"]));
    let fused = fusion_marginal(&members, &set(&["x", "z"]), &order).unwrap();
    println!("fusion along {order:?} agrees: {}", fused == xz);

    println!("x _|_ z | y: {}", check_ci(&joint, &set(&["x"]), &set(&["z"]), &set(&["y"])));
    println!("x _|_ z:     {}", check_ci(&joint, &set(&["x"]), &set(&["z"]), &set(&[])));

    let free = combine(&x, &RelationalStructure::boolean(&["w"], &[&[false], &[true]])).unwrap();
    println!("x _|_ w:     {}", check_ci(&free, &set(&["x"]), &set(&["w"]), &set(&[])));
}
