//! Build, quantify and count with the BDD package.

use epiveri::bdd::BddManager;
use epiveri::logic::BinOp;

fn main() {
    let mut m = BddManager::new();
    let vars: Vec<_> = ["x", "y", "z"].iter().map(|n| m.add_var(*n).unwrap()).collect();
    let [x, y, z] = [0, 1, 2].map(|i| m.var(vars[i]).unwrap());

    let xy = m.apply(BinOp::Xor, x, y).unwrap();
    let f = m.and(xy, z).unwrap();
    println!("(x xor y) /\\ z: {} nodes, {} models", m.node_count(f), m.sat_count(f, &vars).unwrap());

    let g = m.exists(f, &[vars[0]]).unwrap();
    println!("exists x: support {:?}", m.support(g).unwrap().iter().map(|v| m.var_name(*v)).collect::<Vec<_>>());

    let nz = m.not(z).unwrap();
    let h = m.and_exists(f, nz, &[vars[2]]).unwrap();
    println!("exists z. f /\\ neg z is false: {}", h.is_false());
    println!("a model of f: {:?}", m.any_sat(f).unwrap());
    print!("{}", m.to_dot(f));
}
