//! DAG-structured models and the graph analyses on them: ancestral sets,
//! moralization, d-separation, the relevance function, leaf elimination
//! and equality renaming.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::logic::Formula;
use crate::relational::{marginalize, RelationalStructure};

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructuredError {
    #[error("d-separation needs pairwise disjoint sets")]
    NonDisjointSets,
    #[error("node `{name}` is not a valid structured-model node: {reason}")]
    InvalidNode { name: String, reason: String },
    #[error("cannot rename `{x}` to `{y}`: {reason}")]
    PreconditionViolated { x: String, y: String, reason: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

/// A DAG whose vertices carry unique names. Parents must exist before a
/// node is added, so the graph is acyclic by construction. Removed nodes
/// keep their id but are no longer alive.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dag {
    names: Vec<String>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    alive: Vec<bool>,
    by_name: FxHashMap<String, NodeId>,
}

impl Dag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, name: impl Into<String>, parents: &[NodeId]) -> NodeId {
        let name = name.into();
        let id = self.names.len();
        assert!(!self.by_name.contains_key(&name), "duplicate node {name}");
        let mut ps: Vec<NodeId> = parents.to_vec();
        ps.sort_unstable();
        ps.dedup();
        for p in &ps {
            assert!(*p < id && self.alive[*p], "parent must be a live earlier node");
            self.children[*p].push(id);
        }
        self.names.push(name.clone());
        self.parents.push(ps);
        self.children.push(vec![]);
        self.alive.push(true);
        self.by_name.insert(name, id);
        id
    }

    /// Live vertices in id order.
    pub fn vertices(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.names.len()).filter(|v| self.alive[*v])
    }

    pub fn len(&self) -> usize {
        self.alive.iter().filter(|a| **a).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_alive(&self, v: NodeId) -> bool {
        self.alive[v]
    }

    pub fn name(&self, v: NodeId) -> &str {
        &self.names[v]
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.by_name.get(name).copied()
    }

    pub fn parents(&self, v: NodeId) -> &[NodeId] {
        &self.parents[v]
    }

    pub fn children(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.children[v].iter().copied().filter(|c| self.alive[*c])
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.children(v).next().is_none()
    }

    fn remove(&mut self, v: NodeId) {
        assert!(self.is_leaf(v), "only leaves can be removed");
        self.alive[v] = false;
        self.by_name.remove(&self.names[v]);
    }

    /// Sort vertices by name for deterministic output.
    pub fn sorted_by_name(&self, set: impl IntoIterator<Item = NodeId>) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = set.into_iter().collect();
        v.sort_by(|a, b| natural_cmp(&self.names[*a], &self.names[*b]));
        v
    }

    pub fn names_of(&self, set: &BTreeSet<NodeId>) -> Vec<String> {
        self.sorted_by_name(set.iter().copied())
            .into_iter()
            .map(|v| self.names[v].clone())
            .collect()
    }
}

/// Order names by their alphabetic parts and compare digit runs
/// numerically, so `x[2]` sorts before `x[10]`.
pub fn natural_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = vec![];
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for (x, y) in ca.iter().zip(&cb) {
        let ord = match (x.0, y.0) {
            (true, true) => (x.1.len(), x.1).cmp(&(y.1.len(), y.1)),
            _ => x.1.cmp(y.1),
        };
        if ord.is_ne() {
            return ord;
        }
    }
    ca.len().cmp(&cb.len())
}

/// An undirected graph on a subset of a DAG's vertices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UGraph {
    pub adj: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl UGraph {
    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adj.get(&a).is_some_and(|n| n.contains(&b))
    }

    fn add_edge(&mut self, a: NodeId, b: NodeId) {
        if a != b {
            self.adj.entry(a).or_default().insert(b);
            self.adj.entry(b).or_default().insert(a);
        }
    }

    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.adj
            .iter()
            .flat_map(|(a, ns)| ns.iter().filter(move |b| a < *b).map(move |b| (*a, *b)))
            .collect()
    }
}

/// `An(X)`: `X` together with every vertex that has a directed path into `X`.
pub fn ancestors(g: &Dag, x: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
    let mut seen: BTreeSet<NodeId> = x.iter().copied().filter(|v| g.is_alive(*v)).collect();
    let mut stack: Vec<NodeId> = seen.iter().copied().collect();
    while let Some(v) = stack.pop() {
        for p in g.parents(v) {
            if seen.insert(*p) {
                stack.push(*p);
            }
        }
    }
    seen
}

/// The moral graph of the subgraph induced by `within`: parent edges
/// without direction plus an edge between every pair of co-parents.
pub fn moralize_within(g: &Dag, within: &BTreeSet<NodeId>) -> UGraph {
    let mut h = UGraph::default();
    for &v in within {
        h.adj.entry(v).or_default();
        let ps: Vec<NodeId> = g.parents(v).iter().copied().filter(|p| within.contains(p)).collect();
        for (i, p) in ps.iter().enumerate() {
            h.add_edge(*p, v);
            for q in &ps[i + 1..] {
                h.add_edge(*p, *q);
            }
        }
    }
    h
}

pub fn moralize(g: &Dag) -> UGraph {
    moralize_within(g, &g.vertices().collect())
}

/// Whether every path from `x` to `y` in the moralized ancestral graph of
/// `x ∪ y ∪ z` passes through `z`.
pub fn d_separated(
    g: &Dag,
    x: &BTreeSet<NodeId>,
    y: &BTreeSet<NodeId>,
    z: &BTreeSet<NodeId>,
) -> Result<bool, StructuredError> {
    if !x.is_disjoint(y) || !x.is_disjoint(z) || !y.is_disjoint(z) {
        return Err(StructuredError::NonDisjointSets);
    }
    let seed: BTreeSet<NodeId> = x.iter().chain(y).chain(z).copied().collect();
    let h = moralize_within(g, &ancestors(g, &seed));
    let mut seen: BTreeSet<NodeId> = x.clone();
    let mut queue: VecDeque<NodeId> = x.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        if y.contains(&v) {
            return Ok(false);
        }
        for n in &h.adj[&v] {
            if !z.contains(n) && seen.insert(*n) {
                queue.push_back(*n);
            }
        }
    }
    Ok(true)
}

/// d-separation of arbitrary sets: shared elements are moved into the
/// conditioning set, which leaves the independence statement unchanged.
pub fn d_separated_disjointified(
    g: &Dag,
    x: &BTreeSet<NodeId>,
    y: &BTreeSet<NodeId>,
    z: &BTreeSet<NodeId>,
) -> bool {
    let mut zz = z.clone();
    zz.extend(x.intersection(y));
    let xx = x.difference(&zz).copied().collect();
    let yy = y.difference(&zz).copied().collect();
    d_separated(g, &xx, &yy, &zz).expect("disjoint by construction")
}

/// The observable boundary `W` between `k` and the rest of `o`.
///
/// Searches the moralized ancestral graph of `o ∪ k` from `k \ o`, stopping
/// at the first vertex of `o` on each path. Returns those vertices together
/// with `k ∩ o`.
pub fn minimal_blocker(g: &Dag, k: &BTreeSet<NodeId>, o: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
    let seed: BTreeSet<NodeId> = o.union(k).copied().collect();
    let h = moralize_within(g, &ancestors(g, &seed));
    let mut w: BTreeSet<NodeId> = k.intersection(o).copied().collect();
    let mut seen: BTreeSet<NodeId> = k.difference(o).copied().collect();
    let mut stack: Vec<NodeId> = seen.iter().copied().collect();
    while let Some(v) = stack.pop() {
        for n in &h.adj[&v] {
            if seen.insert(*n) {
                if o.contains(n) {
                    w.insert(*n);
                } else {
                    stack.push(*n);
                }
            }
        }
    }
    w
}

/// `κ(f)` for observation sets `o` indexed by agent.
///
/// Atoms contribute themselves; `K_i φ` contributes the minimal blocker of
/// `κ(φ)` in `o[i]`.
pub fn relevance(g: &Dag, o: &[BTreeSet<NodeId>], f: &Formula<NodeId>) -> BTreeSet<NodeId> {
    match f {
        Formula::Const(_) => BTreeSet::new(),
        Formula::Atom(v) => BTreeSet::from([*v]),
        Formula::Not(a) => relevance(g, o, a),
        Formula::Bin(_, a, b) => {
            let mut s = relevance(g, o, a);
            s.extend(relevance(g, o, b));
            s
        }
        Formula::Knows(i, a) => {
            let inner = relevance(g, o, a);
            let mut s = minimal_blocker(g, &inner, &o[*i]);
            s.extend(inner);
            s
        }
    }
}

/// A DAG with one relation per vertex over the vertex and its parents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuredModel<R> {
    pub dag: Dag,
    pub relations: Vec<R>,
}

impl<R> StructuredModel<R> {
    pub fn new() -> Self {
        StructuredModel {
            dag: Dag::new(),
            relations: vec![],
        }
    }

    pub fn add_node(&mut self, name: impl Into<String>, parents: &[NodeId], rel: R) -> NodeId {
        let id = self.dag.add_node(name, parents);
        self.relations.push(rel);
        id
    }

    pub fn relation(&self, v: NodeId) -> &R {
        &self.relations[v]
    }
}

impl<R> Default for StructuredModel<R> {
    fn default() -> Self {
        Self::new()
    }
}

/// Node relations that support equality renaming.
pub trait NodeRelation: Clone {
    /// Whether the relation of node `y` is `δ_{x,y}`.
    fn is_equality(&self, x: &str, y: &str) -> bool;
    /// The same relation with variable `from` called `to`.
    fn rename_var(&self, from: &str, to: &str) -> Self;
}

impl NodeRelation for RelationalStructure {
    fn is_equality(&self, x: &str, y: &str) -> bool {
        let (Some(i), Some(j)) = (self.column(x), self.column(y)) else {
            return false;
        };
        let frames = self.frames();
        self.vars().len() == 2
            && frames[x] == frames[y]
            && self.len() == frames[x] as usize
            && self.rows().iter().all(|r| r[i] == r[j])
    }

    fn rename_var(&self, from: &str, to: &str) -> Self {
        let frames = self.frames();
        let columns = self
            .vars()
            .iter()
            .map(|v| (if v == from { to.to_string() } else { v.clone() }, frames[v]))
            .collect();
        RelationalStructure::new(columns, self.rows().iter().cloned())
    }
}

/// Check that every node relation has domain `{v} ∪ pa(v)` and leaves its
/// parents unconstrained.
pub fn validate_structured(m: &StructuredModel<RelationalStructure>) -> Result<(), StructuredError> {
    for v in m.dag.vertices() {
        let s = &m.relations[v];
        let name = m.dag.name(v);
        let pa: BTreeSet<String> = m.dag.parents(v).iter().map(|p| m.dag.name(*p).to_string()).collect();
        let mut dom = pa.clone();
        dom.insert(name.to_string());
        if s.domain() != dom {
            return Err(StructuredError::InvalidNode {
                name: name.to_string(),
                reason: format!("domain {:?} differs from {:?}", s.domain(), dom),
            });
        }
        let proj = marginalize(s, &pa);
        if proj != RelationalStructure::identity(&proj.frames()) {
            return Err(StructuredError::InvalidNode {
                name: name.to_string(),
                reason: "the relation constrains its parents".into(),
            });
        }
    }
    Ok(())
}

/// Remove leaves outside `keep` until none remain. Returns the removed
/// vertices in removal order.
pub fn leaf_eliminate<R>(m: &mut StructuredModel<R>, keep: &BTreeSet<NodeId>) -> Vec<NodeId> {
    let mut removed = vec![];
    let mut stack: Vec<NodeId> = m
        .dag
        .vertices()
        .filter(|v| !keep.contains(v) && m.dag.is_leaf(*v))
        .collect();
    stack.reverse();
    while let Some(v) = stack.pop() {
        if !m.dag.is_alive(v) || keep.contains(&v) || !m.dag.is_leaf(v) {
            continue;
        }
        m.dag.remove(v);
        removed.push(v);
        for p in m.dag.parents(v).to_vec() {
            if m.dag.is_alive(p) && !keep.contains(&p) && m.dag.is_leaf(p) {
                stack.push(p);
            }
        }
    }
    removed
}

/// `M[y/x]`: drop `y`, whose only parent is `x` and whose relation is the
/// equality, and give `x` the name `y` everywhere. Returns the id that now
/// carries the name `y`.
pub fn rename_equality<R: NodeRelation>(
    m: &mut StructuredModel<R>,
    x: NodeId,
    y: NodeId,
) -> Result<NodeId, StructuredError> {
    let (xn, yn) = (m.dag.name(x).to_string(), m.dag.name(y).to_string());
    let fail = |reason: &str| StructuredError::PreconditionViolated {
        x: xn.clone(),
        y: yn.clone(),
        reason: reason.to_string(),
    };
    if !m.dag.is_alive(x) || !m.dag.is_alive(y) {
        return Err(fail("node removed"));
    }
    if m.dag.parents(y) != [x] {
        return Err(fail("the only parent of y must be x"));
    }
    if !m.relations[y].is_equality(&xn, &yn) {
        return Err(fail("the relation of y is not the equality"));
    }
    let kids: Vec<NodeId> = m.dag.children(y).collect();
    if kids.iter().any(|c| m.dag.parents(*c).contains(&x)) {
        return Err(fail("x and y share a child"));
    }
    // y's children become x's children
    for c in &kids {
        for p in m.dag.parents[*c].iter_mut() {
            if *p == y {
                *p = x;
            }
        }
        m.dag.parents[*c].sort_unstable();
        m.dag.parents[*c].dedup();
        m.dag.children[x].push(*c);
    }
    m.dag.children[y].clear();
    m.dag.remove(y);
    // every relation mentioning x now says y
    let xkids: Vec<NodeId> = m.dag.children(x).collect();
    for c in xkids.iter().copied().chain([x]) {
        if !kids.contains(&c) {
            m.relations[c] = m.relations[c].rename_var(&xn, &yn);
        }
    }
    m.dag.by_name.remove(&xn);
    m.dag.by_name.insert(yn.clone(), x);
    m.dag.names[x] = yn;
    Ok(x)
}

/// Options for DOT output.
#[derive(Clone, Debug, Default)]
pub struct DotStyle {
    /// Drawn as boxes, like the observations of a designated agent.
    pub boxed: BTreeSet<NodeId>,
    /// Drawn filled, e.g. the relevant set.
    pub highlighted: BTreeSet<NodeId>,
}

fn dot_node(out: &mut String, g: &Dag, v: NodeId, style: &DotStyle) {
    let shape = if style.boxed.contains(&v) { "box" } else { "ellipse" };
    let fill = if style.highlighted.contains(&v) {
        ", style=filled, fillcolor=lightgrey"
    } else {
        ""
    };
    let _ = writeln!(out, "  n{v} [label=\"{}\", shape={shape}{fill}];", g.name(v).replace('"', "\\\""));
}

/// The live part of the DAG in DOT syntax.
pub fn dag_dot(g: &Dag, style: &DotStyle) -> String {
    let mut out = String::from("digraph G {\n");
    for v in g.sorted_by_name(g.vertices()) {
        dot_node(&mut out, g, v, style);
    }
    for v in g.vertices() {
        for p in g.parents(v) {
            let _ = writeln!(out, "  n{p} -> n{v};");
        }
    }
    out.push_str("}\n");
    out
}

/// An undirected graph over DAG vertices in DOT syntax.
pub fn ugraph_dot(g: &Dag, h: &UGraph, style: &DotStyle) -> String {
    let mut out = String::from("graph G {\n");
    for v in g.sorted_by_name(h.adj.keys().copied()) {
        dot_node(&mut out, g, v, style);
    }
    for (a, b) in h.edges() {
        let _ = writeln!(out, "  n{a} -- n{b};");
    }
    out.push_str("}\n");
    out
}
