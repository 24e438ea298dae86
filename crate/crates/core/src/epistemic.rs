//! Kripke structures and epistemic variable structures.
//!
//! Both kinds of structure evaluate formulas whose atoms are variable names
//! and whose agents are indices. Worlds are addressed by position.

use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::logic::Formula;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EpistemicError {
    #[error("world {0} is not part of the structure")]
    UnknownWorld(String),
    #[error("atom `{0}` is not a variable of the structure")]
    UnknownAtom(String),
    #[error("agent {0} is not part of the structure")]
    UnknownAgent(usize),
}

/// Common interface for evaluating formulas.
pub trait EpistemicModel {
    fn num_worlds(&self) -> usize;
    fn num_agents(&self) -> usize;
    fn var_index(&self, name: &str) -> Option<usize>;
    fn value(&self, world: usize, var: usize) -> bool;
    /// Equivalence class identifier of every world for `agent`.
    fn classes(&self, agent: usize) -> Vec<usize>;
}

/// `(W, ∼, π)` with worlds `0..n`. Each `∼_i` is stored as a class id per
/// world, so reflexivity, symmetry and transitivity hold by construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeStructure {
    vars: Vec<String>,
    valuation: Vec<Vec<bool>>,
    relations: Vec<Vec<usize>>,
}

impl KripkeStructure {
    /// `relations[i][w]` is the class of world `w` for agent `i`.
    pub fn new(vars: Vec<String>, valuation: Vec<Vec<bool>>, relations: Vec<Vec<usize>>) -> Self {
        let n = valuation.len();
        assert!(valuation.iter().all(|a| a.len() == vars.len()));
        assert!(relations.iter().all(|r| r.len() == n));
        KripkeStructure {
            vars,
            valuation,
            relations,
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn valuation(&self, w: usize) -> &[bool] {
        &self.valuation[w]
    }

    pub fn related(&self, agent: usize, u: usize, v: usize) -> bool {
        self.relations[agent][u] == self.relations[agent][v]
    }
}

impl EpistemicModel for KripkeStructure {
    fn num_worlds(&self) -> usize {
        self.valuation.len()
    }
    fn num_agents(&self) -> usize {
        self.relations.len()
    }
    fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }
    fn value(&self, world: usize, var: usize) -> bool {
        self.valuation[world][var]
    }
    fn classes(&self, agent: usize) -> Vec<usize> {
        self.relations[agent].clone()
    }
}

/// `(A, O, V)`: a set of assignments over `V` and an observable subset of
/// `V` per agent. Worlds are kept sorted and distinct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evs {
    vars: Vec<String>,
    worlds: Vec<Vec<bool>>,
    observables: Vec<BTreeSet<usize>>,
}

impl Evs {
    pub fn new(
        vars: Vec<String>,
        worlds: impl IntoIterator<Item = Vec<bool>>,
        observables: Vec<BTreeSet<usize>>,
    ) -> Self {
        let worlds: BTreeSet<Vec<bool>> = worlds.into_iter().collect();
        assert!(worlds.iter().all(|w| w.len() == vars.len()));
        assert!(observables.iter().flatten().all(|v| *v < vars.len()));
        Evs {
            vars,
            worlds: worlds.into_iter().collect(),
            observables,
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn worlds(&self) -> &[Vec<bool>] {
        &self.worlds
    }

    pub fn observables(&self) -> &[BTreeSet<usize>] {
        &self.observables
    }

    pub fn world_index(&self, w: &[bool]) -> Option<usize> {
        self.worlds.binary_search_by(|x| x.as_slice().cmp(w)).ok()
    }

    fn view(&self, agent: usize, w: usize) -> Vec<bool> {
        self.observables[agent].iter().map(|v| self.worlds[w][*v]).collect()
    }
}

impl EpistemicModel for Evs {
    fn num_worlds(&self) -> usize {
        self.worlds.len()
    }
    fn num_agents(&self) -> usize {
        self.observables.len()
    }
    fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }
    fn value(&self, world: usize, var: usize) -> bool {
        self.worlds[world][var]
    }
    fn classes(&self, agent: usize) -> Vec<usize> {
        let mut ids: FxHashMap<Vec<bool>, usize> = FxHashMap::default();
        (0..self.worlds.len())
            .map(|w| {
                let n = ids.len();
                *ids.entry(self.view(agent, w)).or_insert(n)
            })
            .collect()
    }
}

/// The worlds satisfying `f`, as one flag per world.
pub fn satisfying<M: EpistemicModel + ?Sized>(
    m: &M,
    f: &Formula<String>,
) -> Result<Vec<bool>, EpistemicError> {
    let n = m.num_worlds();
    Ok(match f {
        Formula::Const(b) => vec![*b; n],
        Formula::Atom(a) => {
            let i = m
                .var_index(a)
                .ok_or_else(|| EpistemicError::UnknownAtom(a.clone()))?;
            (0..n).map(|w| m.value(w, i)).collect()
        }
        Formula::Not(g) => satisfying(m, g)?.into_iter().map(|b| !b).collect(),
        Formula::Bin(op, a, b) => {
            let x = satisfying(m, a)?;
            let y = satisfying(m, b)?;
            x.into_iter().zip(y).map(|(p, q)| op.apply(p, q)).collect()
        }
        Formula::Knows(i, g) => {
            if *i >= m.num_agents() {
                return Err(EpistemicError::UnknownAgent(*i));
            }
            let inner = satisfying(m, g)?;
            let cls = m.classes(*i);
            let mut ok: FxHashMap<usize, bool> = FxHashMap::default();
            for (c, s) in cls.iter().zip(&inner) {
                *ok.entry(*c).or_insert(true) &= *s;
            }
            cls.iter().map(|c| ok[c]).collect()
        }
    })
}

/// `M, w ⊨ f`.
pub fn eval<M: EpistemicModel + ?Sized>(
    m: &M,
    w: usize,
    f: &Formula<String>,
) -> Result<bool, EpistemicError> {
    if w >= m.num_worlds() {
        return Err(EpistemicError::UnknownWorld(w.to_string()));
    }
    Ok(satisfying(m, f)?[w])
}

/// `M ⊨ f`: `f` holds at every world. Vacuously true without worlds.
pub fn models<M: EpistemicModel + ?Sized>(m: &M, f: &Formula<String>) -> Result<bool, EpistemicError> {
    Ok(satisfying(m, f)?.into_iter().all(|b| b))
}

/// The Kripke structure induced by an EVS: worlds are the assignments and
/// two worlds are related for `i` when they agree on `O_i`.
pub fn ks_of(e: &Evs) -> KripkeStructure {
    let relations = (0..e.num_agents()).map(|i| e.classes(i)).collect();
    KripkeStructure::new(e.vars.clone(), e.worlds.clone(), relations)
}

/// Name of the proposition "the current world is in class `c` of agent `i`".
pub fn class_prop(i: usize, c: usize) -> String {
    format!("cls_{i}_{c}")
}

/// Name of the proposition "the current world is `w`".
pub fn world_prop(w: usize) -> String {
    format!("world_{w}")
}

/// The EVS encoding of a Kripke structure. Each world gets the original
/// valuation, one class proposition per agent class and one world
/// proposition; agent `i` observes exactly its class propositions.
pub fn vs_of(m: &KripkeStructure) -> Evs {
    let n = m.num_worlds();
    let mut vars = m.vars.clone();
    let mut class_vars: Vec<BTreeMap<usize, usize>> = vec![];
    for (i, rel) in m.relations.iter().enumerate() {
        let mut map = BTreeMap::new();
        for c in rel.iter().copied().collect::<BTreeSet<_>>() {
            map.insert(c, vars.len());
            vars.push(class_prop(i, c));
        }
        class_vars.push(map);
    }
    let world_base = vars.len();
    vars.extend((0..n).map(world_prop));
    let total = vars.len();
    let worlds = (0..n).map(|w| {
        let mut a = m.valuation[w].clone();
        a.resize(total, false);
        for (i, rel) in m.relations.iter().enumerate() {
            a[class_vars[i][&rel[w]]] = true;
        }
        a[world_base + w] = true;
        a
    });
    let observables = class_vars
        .iter()
        .map(|map| map.values().copied().collect())
        .collect();
    Evs::new(vars, worlds, observables)
}

/// The world of `vs_of(m)` that encodes world `w` of `m`.
pub fn vs_world(e: &Evs, w: usize) -> usize {
    let idx = e.var_index(&world_prop(w)).expect("structure built by vs_of");
    (0..e.num_worlds())
        .find(|x| e.value(*x, idx))
        .expect("structure built by vs_of")
}

/// Whether `r` satisfies the atomic, forth and back clauses of a
/// bisimulation with respect to the variables `u`.
pub fn is_bisimulation<M1, M2>(
    m: &M1,
    m2: &M2,
    r: &[(usize, usize)],
    u: &[String],
) -> Result<bool, EpistemicError>
where
    M1: EpistemicModel + ?Sized,
    M2: EpistemicModel + ?Sized,
{
    for x in u {
        let i = m.var_index(x).ok_or_else(|| EpistemicError::UnknownAtom(x.clone()))?;
        let j = m2.var_index(x).ok_or_else(|| EpistemicError::UnknownAtom(x.clone()))?;
        if r.iter().any(|(a, b)| m.value(*a, i) != m2.value(*b, j)) {
            return Ok(false);
        }
    }
    if m.num_agents() != m2.num_agents() {
        return Ok(false);
    }
    let rel: BTreeSet<(usize, usize)> = r.iter().copied().collect();
    for agent in 0..m.num_agents() {
        let c1 = m.classes(agent);
        let c2 = m2.classes(agent);
        for &(a, b) in r {
            let forth = (0..m.num_worlds()).filter(|v| c1[*v] == c1[a]).all(|v| {
                (0..m2.num_worlds()).any(|v2| c2[v2] == c2[b] && rel.contains(&(v, v2)))
            });
            let back = (0..m2.num_worlds()).filter(|v2| c2[*v2] == c2[b]).all(|v2| {
                (0..m.num_worlds()).any(|v| c1[v] == c1[a] && rel.contains(&(v, v2)))
            });
            if !forth || !back {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Whether both projections of `r` are total.
pub fn is_total(r: &[(usize, usize)], n1: usize, n2: usize) -> bool {
    let left: BTreeSet<usize> = r.iter().map(|p| p.0).collect();
    let right: BTreeSet<usize> = r.iter().map(|p| p.1).collect();
    left.len() == n1 && right.len() == n2
}

/// `E↓X`: project every world onto `X ∩ V` and intersect the observable
/// sets with `X`.
pub fn marginalize_evs(e: &Evs, x: &BTreeSet<String>) -> Evs {
    let keep: Vec<usize> = (0..e.vars.len()).filter(|i| x.contains(&e.vars[*i])).collect();
    let new_index: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(n, o)| (*o, n)).collect();
    let vars = keep.iter().map(|i| e.vars[*i].clone()).collect();
    let worlds = e
        .worlds
        .iter()
        .map(|w| keep.iter().map(|i| w[*i]).collect::<Vec<bool>>());
    let observables = e
        .observables
        .iter()
        .map(|o| o.iter().filter_map(|v| new_index.get(v).copied()).collect())
        .collect();
    Evs::new(vars, worlds, observables)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(s: &str) -> Formula<String> {
        Formula::Atom(s.to_string())
    }

    fn two_world() -> KripkeStructure {
        KripkeStructure::new(vec!["p".into()], vec![vec![true], vec![false]], vec![vec![0, 0]])
    }

    #[test]
    fn reflexive_single_world() {
        let m = KripkeStructure::new(vec!["p".into()], vec![vec![true]], vec![vec![0]]);
        assert!(eval(&m, 0, &Formula::knows(0, atom("p"))).unwrap());
    }

    #[test]
    fn indistinguishable_worlds_block_knowledge() {
        let m = two_world();
        assert!(!eval(&m, 0, &Formula::knows(0, atom("p"))).unwrap());
        assert!(eval(&m, 0, &atom("p")).unwrap());
    }

    #[test]
    fn errors() {
        let m = two_world();
        assert_eq!(eval(&m, 5, &atom("p")), Err(EpistemicError::UnknownWorld("5".into())));
        assert_eq!(eval(&m, 0, &atom("q")), Err(EpistemicError::UnknownAtom("q".into())));
    }

    #[test]
    fn empty_structure_models_everything() {
        let e = Evs::new(vec!["p".into()], vec![], vec![BTreeSet::new()]);
        assert!(models(&e, &Formula::Const(false)).unwrap());
        assert!(!models(&two_world(), &atom("p")).unwrap());
    }

    #[test]
    fn ks_of_full_observation_is_identity() {
        let e = Evs::new(
            vec!["p".into(), "q".into()],
            vec![vec![false, true], vec![true, true], vec![true, false]],
            vec![BTreeSet::from([0, 1]), BTreeSet::from([1])],
        );
        let k = ks_of(&e);
        let c = k.classes(0);
        assert_eq!(c.iter().collect::<BTreeSet<_>>().len(), 3);
        // worlds are sorted: (0,1), (1,0), (1,1)
        assert!(k.related(1, 0, 2));
        assert!(!k.related(1, 0, 1));
        assert_eq!(k.valuation(2), &[true, true]);
    }

    #[test]
    fn vs_of_sizes_and_bisimulation() {
        let m = KripkeStructure::new(vec!["p".into()], vec![vec![true]], vec![vec![0], vec![0]]);
        let e = vs_of(&m);
        assert_eq!(e.vars().len(), 1 + 2 + 1);

        let m = two_world();
        let e = vs_of(&m);
        let k = ks_of(&e);
        let r: Vec<(usize, usize)> = (0..2).map(|w| (w, vs_world(&e, w))).collect();
        assert!(is_bisimulation(&m, &k, &r, &["p".to_string()]).unwrap());
        assert!(is_total(&r, 2, 2));
    }

    #[test]
    fn identity_and_empty_relations() {
        let m = two_world();
        assert!(is_bisimulation(&m, &m, &[(0, 0), (1, 1)], &["p".to_string()]).unwrap());
        assert!(is_bisimulation(&m, &m, &[], &["p".to_string()]).unwrap());
        assert!(!is_total(&[], 2, 2));
        assert!(!is_bisimulation(&m, &m, &[(0, 1)], &["p".to_string()]).unwrap());
    }

    #[test]
    fn marginalize_boundaries() {
        let e = Evs::new(
            vec!["p".into(), "q".into()],
            vec![vec![false, true], vec![true, true]],
            vec![BTreeSet::from([1])],
        );
        let all: BTreeSet<String> = ["p", "q"].iter().map(|s| s.to_string()).collect();
        assert_eq!(marginalize_evs(&e, &all), e);
        let none = marginalize_evs(&e, &BTreeSet::new());
        assert_eq!(none.worlds(), &[Vec::<bool>::new()]);
        assert_eq!(none.observables(), &[BTreeSet::new()]);
        let q = marginalize_evs(&e, &BTreeSet::from(["q".to_string()]));
        assert_eq!(q.worlds().len(), 1);
        assert_eq!(q.observables()[0], BTreeSet::from([0]));
    }
}
