//! d-separation, minimal blockers and leaf elimination on a small DAG.

use std::collections::BTreeSet;

use epiveri::structured::{d_separated, dag_dot, leaf_eliminate, minimal_blocker, Dag, DotStyle, StructuredModel};

fn main() {
    //   a   b
    //    \ / \
    //     c   d
    //     |
    //     e
    let mut g = Dag::new();
    let a = g.add_node("a", &[]);
    let b = g.add_node("b", &[]);
    let c = g.add_node("c", &[a, b]);
    let d = g.add_node("d", &[b]);
    let e = g.add_node("e", &[c]);
    let s = |v: &[usize]| v.iter().copied().collect::<BTreeSet<_>>();

    println!("a _|_ b        : {}", d_separated(&g, &s(&[a]), &s(&[b]), &s(&[])).unwrap());
    println!("a _|_ b | e    : {}", d_separated(&g, &s(&[a]), &s(&[b]), &s(&[e])).unwrap());
    println!("a _|_ d | b    : {}", d_separated(&g, &s(&[a]), &s(&[d]), &s(&[b])).unwrap());

    let w = minimal_blocker(&g, &s(&[a]), &s(&[c, e]));
    println!("blocker of {{a}} inside {{c, e}}: {:?}", g.names_of(&w));

    let mut m: StructuredModel<()> = StructuredModel::new();
    for v in g.vertices() {
        let ps = g.parents(v).to_vec();
        m.add_node(g.name(v), &ps, ());
    }
    let removed = leaf_eliminate(&mut m, &s(&[a, c]));
    println!("leaves removed keeping a, c: {:?}", removed.iter().map(|v| m.dag.name(*v)).collect::<Vec<_>>());
    print!("{}", dag_dot(&m.dag, &DotStyle { highlighted: s(&[a, c]), ..DotStyle::default() }));
}
