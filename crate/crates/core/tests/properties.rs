mod common;

use common::{frames, joint, mask_set, names, random_model, relation, vnames};

use std::collections::{BTreeMap, BTreeSet};

use epiveri::bdd::BddManager;
use epiveri::checker::{analyze, eval_knows, Mode};
use epiveri::epistemic::{
    eval, is_bisimulation, ks_of, marginalize_evs, models, vs_of, vs_world, EpistemicModel, Evs, KripkeStructure,
};
use epiveri::logic::{BinOp, Expr, Formula};
use epiveri::relational::{
    check_ci, combine, combine_all, fusion_marginal, marginalize, RelationalStructure,
};
use epiveri::script::load_system;
use epiveri::semantics::{oracle_evs, timed_name, DEFAULT_BRANCH_CAP};
use epiveri::structured::{
    d_separated, leaf_eliminate, minimal_blocker, rename_equality, validate_structured, NodeId,
};
use epiveri::unfold::{to_relational, unfold, unfold_with, UnfoldOptions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// relational structures

fn arb_rel() -> impl Strategy<Value = RelationalStructure> {
    (0u8..16, prop::collection::vec(prop::bool::weighted(0.6), 36)).prop_map(|(m, k)| relation(m, &k))
}

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig::with_cases(n)
}

proptest! {
    #![proptest_config(cases(1000))]

    #[test]
    fn va1_semigroup(s in arb_rel(), t in arb_rel(), u in arb_rel()) {
        let st = combine(&s, &t).unwrap();
        prop_assert_eq!(&st, &combine(&t, &s).unwrap());
        prop_assert_eq!(combine(&st, &u).unwrap(), combine(&s, &combine(&t, &u).unwrap()).unwrap());
        let e = RelationalStructure::identity(&s.frames());
        prop_assert_eq!(&combine(&s, &e).unwrap(), &s);
        prop_assert_eq!(&combine(&e, &s).unwrap(), &s);
    }

    #[test]
    fn va2_domain_of_combination(s in arb_rel(), t in arb_rel()) {
        let d: BTreeSet<String> = s.domain().union(&t.domain()).cloned().collect();
        prop_assert_eq!(combine(&s, &t).unwrap().domain(), d);
    }

    #[test]
    fn va3_marginalization(s in arb_rel(), x in 0u8..16) {
        let x = names(x);
        let cap: BTreeSet<String> = x.intersection(&s.domain()).cloned().collect();
        let m = marginalize(&s, &x);
        prop_assert_eq!(&m, &marginalize(&s, &cap));
        prop_assert_eq!(m.domain(), cap);
        prop_assert_eq!(&marginalize(&s, &s.domain()), &s);
    }

    #[test]
    fn va4_transitivity(s in arb_rel(), y in 0u8..16, x in 0u8..16) {
        let (x, y) = (names(x & y), names(y));
        prop_assert_eq!(marginalize(&marginalize(&s, &y), &x), marginalize(&s, &x));
    }

    #[test]
    fn va5_distributivity(s in arb_rel(), t in arb_rel()) {
        let x = s.domain();
        prop_assert_eq!(
            marginalize(&combine(&s, &t).unwrap(), &x),
            combine(&s, &marginalize(&t, &x)).unwrap()
        );
    }

    #[test]
    fn va6_neutrality(x in 0u8..16, y in 0u8..16) {
        let ex = RelationalStructure::identity(&frames(x));
        let ey = RelationalStructure::identity(&frames(y));
        prop_assert_eq!(combine(&ex, &ey).unwrap(), RelationalStructure::identity(&frames(x | y)));
    }

    #[test]
    fn fusion_theorem_every_order(
        s in prop::collection::vec(arb_rel(), 1..4),
        keep in 0u8..16,
        perm in any::<u64>(),
    ) {
        let keep = names(keep);
        let dom: BTreeSet<String> = s.iter().flat_map(|r| r.domain()).collect();
        let mut order: Vec<String> = dom.difference(&keep).cloned().collect();
        let mut r = ChaCha8Rng::seed_from_u64(perm);
        for i in (1..order.len()).rev() {
            order.swap(i, r.gen_range(0..=i));
        }
        let direct = marginalize(&combine_all(&s).unwrap(), &keep);
        prop_assert_eq!(fusion_marginal(&s, &keep, &order).unwrap(), direct);
    }
}

// ---------------------------------------------------------------------------
// structured models

proptest! {
    #![proptest_config(cases(500))]

    #[test]
    fn d_separation_is_sound(seed in any::<u64>()) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        validate_structured(&m).unwrap();
        let j = joint(&m);
        let n = m.dag.len();
        // every assignment of vertices to X, Y, Z or none
        for code in 0..4u32.pow(n as u32) {
            let (mut x, mut y, mut z) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
            let mut c = code;
            for v in 0..n {
                match c % 4 {
                    1 => { x.insert(v); }
                    2 => { y.insert(v); }
                    3 => { z.insert(v); }
                    _ => {}
                }
                c /= 4;
            }
            if x.is_empty() || y.is_empty() {
                continue;
            }
            if d_separated(&m.dag, &x, &y, &z).unwrap() {
                prop_assert!(check_ci(&j, &vnames(&m, &x), &vnames(&m, &y), &vnames(&m, &z)),
                    "x={x:?} y={y:?} z={z:?}");
            }
        }
    }

    #[test]
    fn minimal_blocker_is_minimal(seed in any::<u64>(), km in 1u32..64, om in 0u32..64) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let n = m.dag.len();
        let (k, o) = (mask_set(km, n), mask_set(om, n));
        let w = minimal_blocker(&m.dag, &k, &o);
        let ok = |w: &BTreeSet<NodeId>| {
            let ko: BTreeSet<NodeId> = k.intersection(&o).copied().collect();
            if !ko.is_subset(w) {
                return false;
            }
            let kw: BTreeSet<NodeId> = k.difference(w).copied().collect();
            let ow: BTreeSet<NodeId> = o.difference(w).copied().collect();
            d_separated(&m.dag, &kw, &ow, w).unwrap()
        };
        prop_assert!(w.is_subset(&o));
        prop_assert!(ok(&w));
        let wv: Vec<NodeId> = w.iter().copied().collect();
        for sub in 0..(1u32 << wv.len()) - 1 {
            let smaller: BTreeSet<NodeId> = (0..wv.len()).filter(|i| sub >> i & 1 == 1).map(|i| wv[i]).collect();
            prop_assert!(!ok(&smaller), "{smaller:?} also blocks, w = {w:?}");
        }
    }

    #[test]
    fn leaf_elimination_keeps_the_marginal(seed in any::<u64>(), xm in 0u32..64) {
        let mut m = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let x = mask_set(xm, m.dag.len());
        let names = vnames(&m, &x);
        let before = marginalize(&joint(&m), &names);
        leaf_eliminate(&mut m, &x);
        prop_assert!(m.dag.vertices().filter(|v| m.dag.is_leaf(*v)).all(|v| x.contains(&v)));
        prop_assert_eq!(marginalize(&joint(&m), &names), before);
    }

    #[test]
    fn equality_renaming_keeps_the_joint(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut m = random_model(&mut r);
        let x = r.gen_range(0..m.dag.len());
        let xn = m.dag.name(x).to_string();
        let y = m.add_node("y", &[x], RelationalStructure::boolean(&[&xn, "y"], &[&[false, false], &[true, true]]));
        // a child of y that does not also read x
        if r.gen_bool(0.5) {
            m.add_node("z", &[y], RelationalStructure::boolean(&["y", "z"], &[&[false, true], &[true, false]]));
        }
        let all: BTreeSet<String> = m.dag.vertices().map(|v| m.dag.name(v).to_string()).filter(|s| *s != xn).collect();
        let before = marginalize(&joint(&m), &all);
        rename_equality(&mut m, x, y).unwrap();
        validate_structured(&m).unwrap();
        prop_assert_eq!(joint(&m), before);
    }
}

// ---------------------------------------------------------------------------
// epistemic structures

fn random_kripke(r: &mut impl Rng) -> KripkeStructure {
    let worlds = r.gen_range(1..=5);
    let atoms = r.gen_range(1..=4);
    let agents = r.gen_range(1..=3);
    let vars = (0..atoms).map(|i| format!("p{i}")).collect();
    let val = (0..worlds).map(|_| (0..atoms).map(|_| r.gen_bool(0.5)).collect()).collect();
    let rel = (0..agents).map(|_| (0..worlds).map(|_| r.gen_range(0..worlds)).collect()).collect();
    KripkeStructure::new(vars, val, rel)
}

fn random_formula(r: &mut impl Rng, atoms: usize, agents: usize, depth: u32) -> Formula<String> {
    if depth == 0 || r.gen_bool(0.25) {
        return match r.gen_range(0..8) {
            0 => Formula::Const(r.gen_bool(0.5)),
            _ => Formula::Atom(format!("p{}", r.gen_range(0..atoms))),
        };
    }
    match r.gen_range(0..5) {
        0 => Formula::not(random_formula(r, atoms, agents, depth - 1)),
        1 | 2 => Formula::knows(r.gen_range(0..agents), random_formula(r, atoms, agents, depth - 1)),
        _ => {
            let op = [BinOp::And, BinOp::Or, BinOp::Implies, BinOp::Iff, BinOp::Xor][r.gen_range(0..5)];
            Formula::bin(op, random_formula(r, atoms, agents, depth - 1), random_formula(r, atoms, agents, depth - 1))
        }
    }
}

proptest! {
    #![proptest_config(cases(500))]

    #[test]
    fn vs_of_preserves_validity(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let m = random_kripke(&mut r);
        let back = ks_of(&vs_of(&m));
        for _ in 0..10 {
            let f = random_formula(&mut r, m.vars().len(), m.num_agents(), 3);
            prop_assert_eq!(models(&m, &f).unwrap(), models(&back, &f).unwrap());
        }
    }

    #[test]
    fn bisimilar_worlds_agree(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let m = random_kripke(&mut r);
        let e = vs_of(&m);
        let rel: Vec<(usize, usize)> = (0..m.num_worlds()).map(|w| (w, vs_world(&e, w))).collect();
        prop_assert!(is_bisimulation(&m, &e, &rel, m.vars()).unwrap());
        for _ in 0..10 {
            let f = random_formula(&mut r, m.vars().len(), m.num_agents(), 3);
            for (w, w2) in &rel {
                prop_assert_eq!(eval(&m, *w, &f).unwrap(), eval(&e, *w2, &f).unwrap());
            }
        }
    }

    #[test]
    fn finer_observation_never_loses_knowledge(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let vars: Vec<String> = (0..4).map(|i| format!("p{i}")).collect();
        let worlds: Vec<Vec<bool>> = (0..r.gen_range(1..10)).map(|_| (0..4).map(|_| r.gen_bool(0.5)).collect()).collect();
        let obs: BTreeSet<usize> = (0..4).filter(|_| r.gen_bool(0.4)).collect();
        let mut finer = obs.clone();
        finer.insert(r.gen_range(0..4));
        let coarse = Evs::new(vars.clone(), worlds.clone(), vec![obs]);
        let fine = Evs::new(vars, worlds, vec![finer]);
        let phi = Formula::knows(0, random_formula(&mut r, 4, 1, 0));
        let (a, b) = (epiveri::epistemic::satisfying(&coarse, &phi).unwrap(), epiveri::epistemic::satisfying(&fine, &phi).unwrap());
        prop_assert!(a.iter().zip(&b).all(|(x, y)| !*x || *y));
    }
}

// ---------------------------------------------------------------------------
// BDDs

fn random_expr(r: &mut impl Rng, vars: u32, depth: u32) -> Expr<u32> {
    if depth == 0 || r.gen_bool(0.2) {
        return match r.gen_range(0..10) {
            0 => Expr::Const(r.gen_bool(0.5)),
            _ => Expr::Var(r.gen_range(0..vars)),
        };
    }
    match r.gen_range(0..6) {
        0 => Expr::not(random_expr(r, vars, depth - 1)),
        k => {
            let op = [BinOp::And, BinOp::Or, BinOp::Xor, BinOp::Implies, BinOp::Iff][k - 1];
            Expr::bin(op, random_expr(r, vars, depth - 1), random_expr(r, vars, depth - 1))
        }
    }
}

fn truth(e: &Expr<u32>, a: u32) -> bool {
    match e {
        Expr::Const(b) => *b,
        Expr::Var(v) => a >> v & 1 == 1,
        Expr::Not(x) => !truth(x, a),
        Expr::Bin(op, x, y) => op.apply(truth(x, a), truth(y, a)),
    }
}

fn build(m: &mut BddManager, e: &Expr<u32>) -> epiveri::bdd::BddRef {
    match e {
        Expr::Const(b) => m.constant(*b),
        Expr::Var(v) => m.var(*v).unwrap(),
        Expr::Not(x) => {
            let x = build(m, x);
            m.not(x).unwrap()
        }
        Expr::Bin(op, x, y) => {
            let (x, y) = (build(m, x), build(m, y));
            m.apply(*op, x, y).unwrap()
        }
    }
}

fn table(m: &BddManager, f: epiveri::bdd::BddRef, n: u32) -> Vec<bool> {
    (0..1u32 << n).map(|a| m.eval(f, &mut |v| a >> v & 1 == 1).unwrap()).collect()
}

proptest! {
    #![proptest_config(cases(500))]

    #[test]
    fn bdd_matches_truth_tables(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let n = r.gen_range(1..=5u32);
        let mut m = BddManager::new();
        let vars: Vec<u32> = (0..n).map(|i| m.add_var(format!("x{i}")).unwrap()).collect();
        let (e1, e2) = (random_expr(&mut r, n, 5), random_expr(&mut r, n, 5));
        let (f, g) = (build(&mut m, &e1), build(&mut m, &e2));
        let (tf, tg) = (table(&m, f, n), table(&m, g, n));
        prop_assert_eq!(&tf, &(0..1u32 << n).map(|a| truth(&e1, a)).collect::<Vec<_>>());
        // canonicity
        prop_assert_eq!(f == g, tf == tg);
        let count = tf.iter().filter(|b| **b).count();
        prop_assert_eq!(m.sat_count(f, &vars).unwrap(), count.into());
        prop_assert_eq!(m.any_sat(f).unwrap().is_some(), count > 0);

        let q: Vec<u32> = vars.iter().copied().filter(|_| r.gen_bool(0.5)).collect();
        let qmask: u32 = q.iter().map(|v| 1 << v).sum();
        let ex = m.exists(f, &q).unwrap();
        let fa = m.forall(f, &q).unwrap();
        let fg = m.and(f, g).unwrap();
        let ae = m.and_exists(f, g, &q).unwrap();
        let (tex, tfa, tae) = (table(&m, ex, n), table(&m, fa, n), table(&m, ae, n));
        let tfg = table(&m, fg, n);
        for a in 0..1u32 << n {
            let free = a & !qmask;
            let variants: Vec<u32> = (0..1u32 << n).filter(|b| b & !qmask == free).collect();
            prop_assert_eq!(tex[a as usize], variants.iter().any(|b| tf[*b as usize]));
            prop_assert_eq!(tfa[a as usize], variants.iter().all(|b| tf[*b as usize]));
            prop_assert_eq!(tae[a as usize], variants.iter().any(|b| tfg[*b as usize]));
        }
        prop_assert!(m.support(ex).unwrap().is_disjoint(&q.iter().copied().collect()));
        m.audit().unwrap();
    }

    #[test]
    fn eval_knows_matches_double_loop(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut m = BddManager::new();
        let mut prime = BTreeMap::new();
        for i in 0..3 {
            let v = m.add_var(format!("x{i}")).unwrap();
            let p = m.add_var(format!("x{i}'")).unwrap();
            prime.insert(v, p);
        }
        let base: Vec<u32> = prime.keys().copied().collect();
        let worlds_set: Vec<bool> = (0..8).map(|_| r.gen_bool(0.6)).collect();
        let phi_set: Vec<bool> = (0..8).map(|_| r.gen_bool(0.6)).collect();
        let obs: Vec<u32> = base.iter().copied().filter(|_| r.gen_bool(0.5)).collect();
        let from_set = |m: &mut BddManager, s: &[bool]| {
            let mut acc = m.constant(false);
            for (a, keep) in s.iter().enumerate() {
                if !keep { continue; }
                let mut cube = m.constant(true);
                for (i, v) in base.iter().enumerate() {
                    let x = m.var(*v).unwrap();
                    let lit = if a >> i & 1 == 1 { x } else { m.not(x).unwrap() };
                    cube = m.and(cube, lit).unwrap();
                }
                acc = m.or(acc, cube).unwrap();
            }
            acc
        };
        let w = from_set(&mut m, &worlds_set);
        let p = from_set(&mut m, &phi_set);
        let k = eval_knows(&mut m, w, &obs, &prime, p).unwrap();
        let omask: usize = obs.iter().map(|v| 1usize << base.iter().position(|b| b == v).unwrap()).sum();
        for a in 0..8usize {
            let expect = worlds_set[a]
                && (0..8).all(|b| !(worlds_set[b] && (a & omask) == (b & omask)) || phi_set[b]);
            let got = m.eval(k, &mut |v| {
                base.iter().position(|b| *b == v).is_some_and(|i| a >> i & 1 == 1)
            }).unwrap();
            prop_assert_eq!(got, expect);
        }
    }
}

// ---------------------------------------------------------------------------
// unfolding and relevance on random programs

proptest! {
    #![proptest_config(cases(200))]

    #[test]
    fn relevant_marginal_preserves_the_verdict(seed in any::<u64>()) {
        let text = common::random_script(&mut ChaCha8Rng::seed_from_u64(seed));
        let sys = load_system(&text).unwrap();
        let spec = &sys.specs[0];
        let Ok(evs) = oracle_evs(&sys, spec.time, DEFAULT_BRANCH_CAP) else { return Ok(()); };
        if evs.worlds().is_empty() {
            return Ok(());
        }
        let f = spec.formula.map_atoms(&mut |v| timed_name(&sys, *v, spec.time));
        let a = analyze(&sys, &spec.formula, spec.time, Mode::Optimized).unwrap();
        let x: BTreeSet<String> = a.kappa.iter().flat_map(|n| a.unfolding.timed_names(*n)).collect();
        let small = marginalize_evs(&evs, &x);
        prop_assert_eq!(models(&evs, &f).unwrap(), models(&small, &f).unwrap(), "{}", text);
    }

    #[test]
    fn unfolding_denotes_the_runs(seed in any::<u64>()) {
        let text = common::random_script(&mut ChaCha8Rng::seed_from_u64(seed));
        let sys = load_system(&text).unwrap();
        let k = sys.horizon;
        let Ok(evs) = oracle_evs(&sys, k, DEFAULT_BRANCH_CAP) else { return Ok(()); };
        for shortcut in [true, false] {
            let u = unfold_with(&sys, k, UnfoldOptions { equality_shortcut: shortcut });
            let m = to_relational(&u);
            validate_structured(&m).unwrap();
            let j = joint(&m);
            let mut got = BTreeSet::new();
            for row in j.rows() {
                let w: Vec<bool> = evs
                    .vars()
                    .iter()
                    .map(|name| {
                        let (v, t) = name.rsplit_once('@').unwrap();
                        let node = u.node_at(sys.var_id(v).unwrap(), t.parse().unwrap());
                        row[j.column(u.node_name(node)).unwrap()] == 1
                    })
                    .collect();
                got.insert(w);
            }
            let want: BTreeSet<Vec<bool>> = evs.worlds().iter().cloned().collect();
            prop_assert_eq!(got, want, "{}", text);
        }
        let plain = unfold_with(&sys, k, UnfoldOptions { equality_shortcut: false });
        let fast = unfold(&sys, k);
        prop_assert_eq!(plain.num_nodes() - fast.num_nodes(), fast.aliased);
        let steps: usize = (0..k).map(|t| sys.tick_code(t).count()).sum();
        prop_assert_eq!(plain.num_nodes(), plain.init_node.is_some() as usize + sys.num_vars() + steps);
    }
}
