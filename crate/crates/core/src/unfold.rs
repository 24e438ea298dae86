//! Symbolic execution of a checked system into a structured model over
//! indexed variables.
//!
//! `v^k` is the node created by the `k`-th write to `v`, and `v^0` holds its
//! initial value. An indexing `γ` maps each program variable to the node
//! that currently holds its value; a bare copy `v := u` makes `γ(v)` an
//! alias of `γ(u)` instead of creating a node.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use crate::logic::{Expr, Formula};
use crate::relational::RelationalStructure;
use crate::script::{CheckedSystem, Command, VarId};
use crate::structured::{DotStyle, NodeId, NodeRelation, StructuredModel};

/// Name of the pseudo-node holding the initial condition.
pub const INIT_NODE: &str = "v_init";

/// `v^k`, or the initial-condition pseudo-variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexedVar {
    Init,
    Var(VarId, usize),
}

/// The relation of one node, as a formula over node ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeRel {
    /// The initial condition, on the `v_init` node.
    Init(Expr<VarId>),
    /// `v^0` equals the `v` component of `v_init`.
    InitComponent(VarId),
    /// Unconstrained: initial values outside the initial condition and
    /// `rand` results.
    Free,
    /// `v^k ⇔ e`, with `e` over parent nodes.
    Equals(Expr<NodeId>),
}

impl NodeRelation for NodeRel {
    fn is_equality(&self, _x: &str, _y: &str) -> bool {
        matches!(self, NodeRel::Equals(Expr::Var(_)))
    }

    // relations refer to nodes by id, which renaming keeps
    fn rename_var(&self, _from: &str, _to: &str) -> Self {
        self.clone()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct UnfoldOptions {
    pub equality_shortcut: bool,
}

impl Default for UnfoldOptions {
    fn default() -> Self {
        UnfoldOptions {
            equality_shortcut: true,
        }
    }
}

/// A structured model produced by unfolding, with its indexings.
#[derive(Clone, Debug)]
pub struct Unfolding {
    pub model: StructuredModel<NodeRel>,
    /// The indexed variable of every node id.
    pub labels: Vec<IndexedVar>,
    pub init_node: Option<NodeId>,
    /// Variables constrained by the initial condition, in id order.
    pub init_vars: Vec<VarId>,
    /// The current indexing `γ`.
    pub gamma: Vec<NodeId>,
    /// `γ_0 … γ_t` after each completed tick.
    pub snapshots: Vec<Vec<NodeId>>,
    /// Copies resolved by aliasing instead of a new node.
    pub aliased: usize,
    next_index: Vec<usize>,
    var_names: Vec<String>,
}

impl Unfolding {
    pub fn indexed_name(&self, v: IndexedVar) -> String {
        match v {
            IndexedVar::Init => INIT_NODE.to_string(),
            IndexedVar::Var(x, k) => format!("{}^{k}", self.var_names[x]),
        }
    }

    pub fn node_name(&self, n: NodeId) -> &str {
        self.model.dag.name(n)
    }

    pub fn num_nodes(&self) -> usize {
        self.model.dag.len()
    }

    /// Timed variables `v@t` whose value is held by node `n`.
    pub fn timed_names(&self, n: NodeId) -> Vec<String> {
        let mut out = vec![];
        for (t, g) in self.snapshots.iter().enumerate() {
            for (v, m) in g.iter().enumerate() {
                if *m == n {
                    out.push(format!("{}@{t}", self.var_names[v]));
                }
            }
        }
        out
    }

    /// The node holding `v@t`.
    pub fn node_at(&self, v: VarId, t: usize) -> NodeId {
        self.snapshots[t][v]
    }

    fn add(&mut self, label: IndexedVar, parents: &[NodeId], rel: NodeRel) -> NodeId {
        let name = self.indexed_name(label);
        let id = self.model.add_node(name, parents, rel);
        debug_assert_eq!(id, self.labels.len());
        self.labels.push(label);
        id
    }
}

/// The model before any code runs: `v^0` for every variable, plus
/// `v_init` when the initial condition is not `True`.
pub fn initial_model(sys: &CheckedSystem) -> Unfolding {
    let mut u = Unfolding {
        model: StructuredModel::new(),
        labels: vec![],
        init_node: None,
        init_vars: vec![],
        gamma: vec![],
        snapshots: vec![],
        aliased: 0,
        next_index: vec![1; sys.num_vars()],
        var_names: sys.vars.clone(),
    };
    if sys.init != Expr::Const(true) {
        u.init_vars = sys.init.atoms().into_iter().collect();
        u.init_node = Some(u.add(IndexedVar::Init, &[], NodeRel::Init(sys.init.clone())));
    }
    for v in 0..sys.num_vars() {
        let id = if u.init_vars.contains(&v) {
            let p = u.init_node.unwrap();
            u.add(IndexedVar::Var(v, 0), &[p], NodeRel::InitComponent(v))
        } else {
            u.add(IndexedVar::Var(v, 0), &[], NodeRel::Free)
        };
        u.gamma.push(id);
    }
    u.snapshots.push(u.gamma.clone());
    u
}

/// Process one statement against the current indexing.
pub fn apply_stmt(u: &mut Unfolding, cmd: &Command, opts: UnfoldOptions) {
    match cmd {
        Command::Assign(v, e) => {
            if opts.equality_shortcut {
                if let Some(src) = e.as_var() {
                    u.gamma[*v] = u.gamma[*src];
                    u.aliased += 1;
                    return;
                }
            }
            let rhs = e.map(&mut |x| u.gamma[*x]);
            let parents: Vec<NodeId> = rhs.atoms().into_iter().collect();
            let k = u.next_index[*v];
            u.next_index[*v] += 1;
            u.gamma[*v] = u.add(IndexedVar::Var(*v, k), &parents, NodeRel::Equals(rhs));
        }
        Command::Rand(v) => {
            let k = u.next_index[*v];
            u.next_index[*v] += 1;
            u.gamma[*v] = u.add(IndexedVar::Var(*v, k), &[], NodeRel::Free);
        }
    }
}

/// Unfold the first `k` ticks, with the equality shortcut.
pub fn unfold(sys: &CheckedSystem, k: usize) -> Unfolding {
    unfold_with(sys, k, UnfoldOptions::default())
}

pub fn unfold_with(sys: &CheckedSystem, k: usize, opts: UnfoldOptions) -> Unfolding {
    assert!(k <= sys.horizon, "unfolding beyond the horizon");
    let mut u = initial_model(sys);
    for t in 0..k {
        for cmd in sys.tick_code(t) {
            apply_stmt(&mut u, cmd, opts);
        }
        u.snapshots.push(u.gamma.clone());
    }
    u
}

/// Read each atom `v` (at time `k`) as the node `γ_k(v)`.
pub fn timed_to_indexed(u: &Unfolding, f: &Formula<VarId>, k: usize) -> Formula<NodeId> {
    f.map_atoms(&mut |v| u.snapshots[k][*v])
}

/// `{γ_t(v) : v ∈ Q_i, t ≤ k}`.
pub fn observable_indexed(
    sys: &CheckedSystem,
    u: &Unfolding,
    agent: usize,
    k: usize,
) -> BTreeSet<NodeId> {
    sys.agents[agent]
        .observables
        .iter()
        .flat_map(|v| (0..=k).map(move |t| u.snapshots[t][*v]))
        .collect()
}

/// Concrete relations for every live node, for validation and brute-force
/// comparison. `v_init` ranges over the assignments of the initial-condition
/// variables, encoded as integers (bit `i` is the `i`-th variable).
pub fn to_relational(u: &Unfolding) -> StructuredModel<RelationalStructure> {
    let g = &u.model.dag;
    let mut out = StructuredModel::new();
    let mut id_map: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let width = u.init_vars.len();
    assert!(width <= 16, "initial condition too wide to tabulate");
    let init_frame = 1u32 << width;
    let frame = |n: NodeId| if Some(n) == u.init_node { init_frame } else { 2 };
    for n in g.vertices() {
        let name = g.name(n).to_string();
        let parents = g.parents(n);
        let mut columns: Vec<(String, u32)> =
            parents.iter().map(|p| (g.name(*p).to_string(), frame(*p))).collect();
        columns.push((name.clone(), frame(n)));
        let mut rows = vec![];
        let sizes: Vec<u32> = columns.iter().map(|c| c.1).collect();
        let mut row = vec![0u32; sizes.len()];
        'enumerate: loop {
            let own = *row.last().unwrap();
            let ok = match &u.model.relations[n] {
                NodeRel::Free => true,
                NodeRel::Init(e) => e.eval(&mut |v| {
                    let i = u.init_vars.iter().position(|x| x == v).unwrap();
                    (own >> i) & 1 == 1
                }),
                NodeRel::InitComponent(v) => {
                    let i = u.init_vars.iter().position(|x| x == v).unwrap();
                    ((row[0] >> i) & 1) == own
                }
                NodeRel::Equals(e) => {
                    let val = e.eval(&mut |p| row[parents.iter().position(|x| x == p).unwrap()] == 1);
                    val as u32 == own
                }
            };
            if ok {
                rows.push(row.clone());
            }
            for i in 0..row.len() {
                row[i] += 1;
                if row[i] < sizes[i] {
                    continue 'enumerate;
                }
                row[i] = 0;
            }
            break;
        }
        let new_parents: Vec<NodeId> = parents.iter().map(|p| id_map[p]).collect();
        let id = out.add_node(name.clone(), &new_parents, RelationalStructure::new(columns, rows));
        id_map.insert(n, id);
    }
    out
}

struct RelDisplay<'a>(&'a Unfolding, NodeId);

impl fmt::Display for RelDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let u = self.0;
        match &u.model.relations[self.1] {
            NodeRel::Free => f.write_str("True"),
            NodeRel::Init(e) => write!(f, "{}", e.map(&mut |v| u.var_names[*v].clone())),
            NodeRel::InitComponent(_) => write!(f, "component of {INIT_NODE}"),
            NodeRel::Equals(e) => write!(
                f,
                "{} <=> {}",
                u.node_name(self.1),
                e.map(&mut |n| u.node_name(*n).to_string())
            ),
        }
    }
}

/// Human-readable relation of node `n`.
pub fn relation_text(u: &Unfolding, n: NodeId) -> String {
    RelDisplay(u, n).to_string()
}

/// DOT output labelling every node with its indexed name and the timed
/// variables it holds.
pub fn unfolding_dot(u: &Unfolding, style: &DotStyle) -> String {
    let g = &u.model.dag;
    let mut out = String::from("digraph unfolded {\n");
    for n in g.sorted_by_name(g.vertices()) {
        let shape = if style.boxed.contains(&n) { "box" } else { "ellipse" };
        let fill = if style.highlighted.contains(&n) {
            ", style=filled, fillcolor=lightgrey"
        } else {
            ""
        };
        let timed = u.timed_names(n);
        let label = if timed.is_empty() {
            g.name(n).to_string()
        } else {
            format!("{}\\n{}", g.name(n), timed.join(" "))
        };
        let _ = writeln!(out, "  n{n} [label=\"{label}\", shape={shape}{fill}];");
    }
    for n in g.vertices() {
        for p in g.parents(n) {
            let _ = writeln!(out, "  n{p} -> n{n};");
        }
    }
    out.push_str("}\n");
    out
}
