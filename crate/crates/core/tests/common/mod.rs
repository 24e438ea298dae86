//! Shared helpers for integration tests: fixtures, seeds and a generator
//! of small random scripts.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use epiveri::relational::{combine_all, RelationalStructure};
use epiveri::structured::{NodeId, StructuredModel};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/{name}.epv", env!("CARGO_MANIFEST_DIR")))
        .unwrap()
}

/// Seed from `EPIVERI_SEED`, or a fixed default.
pub fn seed() -> u64 {
    std::env::var("EPIVERI_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0x5eed_2024)
}

pub fn rng(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed() ^ salt)
}

fn expr(r: &mut impl Rng, vars: &[String], depth: u32) -> String {
    if depth == 0 || vars.is_empty() || r.gen_bool(0.35) {
        return match vars.choose(r) {
            Some(v) if r.gen_range(0..10) > 0 => v.clone(),
            _ => ["True", "False"][r.gen_range(0..2)].to_string(),
        };
    }
    match r.gen_range(0..6) {
        0 => format!("(neg {})", expr(r, vars, depth - 1)),
        k => {
            let op = ["/\\", "\\/", "xor", "=>", "<=>"][k - 1];
            format!("({} {op} {})", expr(r, vars, depth - 1), expr(r, vars, depth - 1))
        }
    }
}

fn formula(r: &mut impl Rng, atoms: &[String], agents: &[String], kdepth: u32, depth: u32) -> String {
    if depth == 0 || r.gen_bool(0.3) {
        return expr(r, atoms, 1);
    }
    match r.gen_range(0..7) {
        0 | 1 if kdepth > 0 => format!(
            "(Knows {} {})",
            agents.choose(r).unwrap(),
            formula(r, atoms, agents, kdepth - 1, depth - 1)
        ),
        2 => format!("(neg {})", formula(r, atoms, agents, kdepth, depth - 1)),
        k => {
            let op = ["/\\", "\\/", "=>", "<=>", "/\\", "\\/", "=>"][k];
            format!(
                "({} {op} {})",
                formula(r, atoms, agents, kdepth, depth - 1),
                formula(r, atoms, agents, kdepth, depth - 1)
            )
        }
    }
}

/// A random script with at most 4 variables, at most 2 agents, at most 3
/// ticks and one spec of K-depth at most 2.
pub fn random_script(r: &mut impl Rng) -> String {
    let globals = r.gen_range(1..=3);
    let agents = r.gen_range(1..=2);
    let ticks = r.gen_range(1..=3);
    let mut locals = vec![0usize; agents];
    let mut budget = 4 - globals;
    for l in locals.iter_mut() {
        if budget > 0 && r.gen_bool(0.4) {
            *l = 1;
            budget -= 1;
        }
    }
    let gnames: Vec<String> = (0..globals).map(|i| format!("g{i}")).collect();
    let anames: Vec<String> = (0..agents).map(|i| format!("A{i}")).collect();
    let mut s = String::new();
    for g in &gnames {
        s += &format!("{g} : Bool\n");
    }
    if r.gen_bool(0.5) {
        s += &format!("init_cond = {}\n", expr(r, &gnames, 2));
    }
    let mut protocols = String::new();
    for a in 0..agents {
        let mut args: Vec<String> = gnames.iter().filter(|_| r.gen_bool(0.6)).cloned().collect();
        if args.is_empty() {
            args.push(gnames.choose(r).unwrap().clone());
        }
        s += &format!("agent A{a} \"p{a}\" ({})\n", args.join(", "));
        let params: Vec<String> = (0..args.len()).map(|i| format!("x{i}")).collect();
        let decls: Vec<String> = params
            .iter()
            .map(|p| format!("{p} : {}Bool", if r.gen_bool(0.5) { "observable " } else { "" }))
            .collect();
        let mut scope = params.clone();
        protocols += &format!("protocol \"p{a}\" ({})\n", decls.join(", "));
        if locals[a] == 1 {
            protocols += &format!("l : {}Bool\n", if r.gen_bool(0.5) { "observable " } else { "" });
            scope.push("l".into());
        }
        let body: Vec<String> = (0..ticks)
            .map(|_| {
                if r.gen_bool(0.3) {
                    return "skip".to_string();
                }
                let mut targets = scope.clone();
                targets.shuffle(r);
                let n = r.gen_range(1..=targets.len().min(2));
                let stmts: Vec<String> = targets[..n]
                    .iter()
                    .map(|t| {
                        if r.gen_bool(0.25) {
                            format!("rand({t})")
                        } else {
                            format!("{t} := {}", expr(r, &scope, 2))
                        }
                    })
                    .collect();
                format!("<| {} |>", stmts.join(" ; "))
            })
            .collect();
        protocols += &format!("begin\n  {}\nend\n\n", body.join(";\n  "));
    }
    if r.gen_bool(0.3) {
        let g = gnames.choose(r).unwrap();
        s += &format!("transitions\nbegin\n{g} := {}\nend\n", expr(r, &gnames, 2));
    }
    let mut atoms = gnames.clone();
    for (a, l) in locals.iter().enumerate() {
        if *l == 1 {
            atoms.push(format!("A{a}.l"));
        }
    }
    let t = r.gen_range(0..=ticks);
    s += &format!("spec_spr = X {t} {}\n\n", formula(r, &atoms, &anames, 2, 4));
    s + &protocols
}

// Relations over a fixed pool of variables with frames 2 and 3.

pub const POOL: [(&str, u32); 4] = [("a", 2), ("b", 3), ("c", 2), ("d", 3)];

pub fn names(mask: u8) -> BTreeSet<String> {
    (0..4).filter(|i| mask >> i & 1 == 1).map(|i| POOL[i].0.to_string()).collect()
}

pub fn frames(mask: u8) -> BTreeMap<String, u32> {
    (0..4)
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| (POOL[i].0.to_string(), POOL[i].1))
        .collect()
}

pub fn relation(mask: u8, keep: &[bool]) -> RelationalStructure {
    let full = RelationalStructure::identity(&frames(mask));
    let cols: Vec<(String, u32)> = frames(mask).into_iter().collect();
    let rows = full.rows().iter().zip(keep.iter().cycle()).filter(|(_, k)| **k).map(|(r, _)| r.clone());
    RelationalStructure::new(cols, rows)
}

/// Random boolean structured model with up to 6 vertices whose node
/// relations leave the parents unconstrained.
pub fn random_model(r: &mut impl Rng) -> StructuredModel<RelationalStructure> {
    let n = r.gen_range(2..=6);
    let mut m = StructuredModel::new();
    for v in 0..n {
        let mut parents: Vec<NodeId> = (0..v).filter(|_| r.gen_bool(0.4)).collect();
        parents.truncate(3);
        let name = format!("v{v}");
        let mut cols: Vec<(String, u32)> = parents.iter().map(|p| (format!("v{p}"), 2)).collect();
        cols.push((name.clone(), 2));
        let mut rows = vec![];
        for a in 0..1u32 << parents.len() {
            let pa: Vec<u32> = (0..parents.len()).map(|i| a >> i & 1).collect();
            let pick = r.gen_range(1..4u32);
            for b in 0..2 {
                if pick >> b & 1 == 1 {
                    let mut row = pa.clone();
                    row.push(b);
                    rows.push(row);
                }
            }
        }
        m.add_node(name, &parents, RelationalStructure::new(cols, rows));
    }
    m
}

pub fn joint(m: &StructuredModel<RelationalStructure>) -> RelationalStructure {
    combine_all(m.dag.vertices().map(|v| &m.relations[v])).unwrap()
}

pub fn vnames(m: &StructuredModel<RelationalStructure>, s: &BTreeSet<NodeId>) -> BTreeSet<String> {
    s.iter().map(|v| m.dag.name(*v).to_string()).collect()
}

pub fn mask_set(mask: u32, n: usize) -> BTreeSet<NodeId> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

/// A relation over a random subset of the pool.
pub fn random_relation(r: &mut impl Rng) -> RelationalStructure {
    let keep: Vec<bool> = (0..36).map(|_| r.gen_bool(0.6)).collect();
    relation(r.gen_range(0..16), &keep)
}
