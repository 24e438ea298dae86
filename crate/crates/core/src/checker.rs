//! The symbolic checking pipeline.
//!
//! 1. Unfold the system to the spec's time with copies aliased.
//! 2. Compute the relevant set `κ`, either by the d-separation analysis or
//!    (baseline) as the formula's atoms plus the full observation sets.
//! 3. Drop leaves outside `κ` and build the world set as a BDD over `κ`,
//!    quantifying the remaining internal nodes bucket by bucket.
//! 4. Evaluate the formula over the world set; it holds when no world
//!    satisfies its negation.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::bdd::{BddError, BddManager, BddRef, BddVar};
use crate::logic::{BinOp, Expr, Formula};
use crate::relational::elimination_order;
use crate::script::{CheckedSpec, CheckedSystem, VarId};
use crate::structured::{
    ancestors, dag_dot, leaf_eliminate, moralize_within, relevance, ugraph_dot, DotStyle, NodeId,
};
use crate::unfold::{observable_indexed, timed_to_indexed, unfold, unfolding_dot, NodeRel, Unfolding};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("the initial condition is unsatisfiable")]
    UnsatisfiableInit,
    #[error("time {time} exceeds the run horizon {horizon}")]
    BeyondHorizon { time: usize, horizon: usize },
    #[error("timed out")]
    Timeout,
    #[error(transparent)]
    Bdd(BddError),
}

impl From<BddError> for CheckError {
    fn from(e: BddError) -> Self {
        match e {
            BddError::Timeout => CheckError::Timeout,
            e => CheckError::Bdd(e),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Optimized,
    Baseline,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Optimized => "optimized",
            Mode::Baseline => "baseline",
        }
    }
}

/// How BDD levels and the quantification sequence are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VarOrder {
    /// Greedy min-degree over the reduced model's node domains.
    #[default]
    MinDegree,
    /// Node creation order.
    Creation,
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub mode: Mode,
    pub order: VarOrder,
    pub deadline: Option<Instant>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            mode: Mode::Optimized,
            order: VarOrder::MinDegree,
            deadline: None,
        }
    }
}

impl CheckOptions {
    pub fn new(mode: Mode) -> Self {
        CheckOptions {
            mode,
            ..Default::default()
        }
    }

    pub fn with_timeout(mut self, t: Duration) -> Self {
        self.deadline = Some(Instant::now() + t);
        self
    }
}

/// Phase timings in milliseconds.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    pub unfold_ms: f64,
    pub analyze_ms: f64,
    pub build_ms: f64,
    pub check_ms: f64,
}

/// Sizes at each stage of the reduction.
///
/// `total_nodes = leaf_removed + kept_vars + quantified`, where `kept_vars`
/// is `|κ|` and `quantified` counts the internal vertices (including
/// `v_init`) that are existentially eliminated.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReductionStats {
    /// Vertices of the unfolded model, including `v_init`.
    pub total_nodes: usize,
    /// Copies that were aliased instead of becoming vertices.
    pub aliased: usize,
    pub kappa: usize,
    pub leaf_removed: usize,
    pub quantified: usize,
    /// Vertices left after leaf elimination, including `v_init`.
    pub reduced_vertices: usize,
    /// The same without `v_init`.
    pub reduced_vertices_without_init: usize,
    /// Unprimed BDD variables of the world set (`|κ|`).
    pub kept_vars: usize,
    /// All BDD variables: quantified internals and primed copies included.
    pub bdd_vars: usize,
    pub worlds_bdd_nodes: usize,
    pub store_nodes: usize,
    pub timings: Timings,
}

/// One variable of a counterexample world.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CexEntry {
    /// The first timed variable holding this value, or the indexed name.
    pub var: String,
    pub indexed: String,
    /// `None` when any value completes the counterexample.
    pub value: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub spec: String,
    pub mode: Mode,
    pub holds: bool,
    pub counterexample: Option<Vec<CexEntry>>,
    pub stats: ReductionStats,
}

/// Result of steps 1 and 2 plus leaf elimination, before any BDD work.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub unfolding: Unfolding,
    pub formula: Formula<NodeId>,
    /// Indexed observation set of every agent.
    pub observables: Vec<BTreeSet<NodeId>>,
    pub kappa: BTreeSet<NodeId>,
    /// Vertices removed as leaves, in removal order.
    pub removed: Vec<NodeId>,
    pub total_nodes: usize,
    pub unfold_time: Duration,
}

impl Analysis {
    pub fn kappa_names(&self) -> Vec<String> {
        self.unfolding.model.dag.names_of(&self.kappa)
    }

    pub fn removed_names(&self) -> Vec<String> {
        let g = &self.unfolding.model.dag;
        self.removed
            .iter()
            .map(|n| g.name(*n).to_string())
            .collect()
    }

    /// Live vertices after leaf elimination.
    pub fn reduced(&self) -> BTreeSet<NodeId> {
        self.unfolding.model.dag.vertices().collect()
    }
}

/// The relevant set used by `mode`.
pub fn relevant_set(
    u: &Unfolding,
    f: &Formula<NodeId>,
    obs: &[BTreeSet<NodeId>],
    mode: Mode,
) -> BTreeSet<NodeId> {
    match mode {
        Mode::Optimized => relevance(&u.model.dag, obs, f),
        Mode::Baseline => {
            let mut k = f.atoms();
            for a in f.agents() {
                k.extend(obs[a].iter().copied());
            }
            k
        }
    }
}

/// Unfold, compute `κ` and eliminate leaves.
pub fn analyze(
    sys: &CheckedSystem,
    formula: &Formula<VarId>,
    k: usize,
    mode: Mode,
) -> Result<Analysis, CheckError> {
    if k > sys.horizon {
        return Err(CheckError::BeyondHorizon {
            time: k,
            horizon: sys.horizon,
        });
    }
    let t0 = Instant::now();
    let mut u = unfold(sys, k);
    let unfold_time = t0.elapsed();
    let f = timed_to_indexed(&u, formula, k);
    let observables: Vec<BTreeSet<NodeId>> = (0..sys.agents.len())
        .map(|a| observable_indexed(sys, &u, a, k))
        .collect();
    let kappa = relevant_set(&u, &f, &observables, mode);
    let total_nodes = u.num_nodes();
    let removed = leaf_eliminate(&mut u.model, &kappa);
    Ok(Analysis {
        unfolding: u,
        formula: f,
        observables,
        kappa,
        removed,
        total_nodes,
        unfold_time,
    })
}

/// Pipeline stage drawn by [`stage_dot`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// The full unfolded DAG.
    Unfolded,
    /// Moral graph of the ancestors of the formula atoms and the
    /// observations of the agents it mentions.
    Moralized,
    /// The DAG after leaf elimination.
    Reduced,
}

/// DOT rendering of one stage. The relevant set is filled and the
/// observations of the first agent in the formula are boxed.
pub fn stage_dot(
    sys: &CheckedSystem,
    formula: &Formula<VarId>,
    k: usize,
    mode: Mode,
    stage: Stage,
) -> Result<String, CheckError> {
    let a = analyze(sys, formula, k, mode)?;
    let style = DotStyle {
        boxed: a
            .formula
            .agents()
            .into_iter()
            .next()
            .map(|ag| a.observables[ag].clone())
            .unwrap_or_default(),
        highlighted: a.kappa.clone(),
    };
    Ok(match stage {
        Stage::Reduced => dag_dot(&a.unfolding.model.dag, &style),
        Stage::Unfolded => unfolding_dot(&unfold(sys, k), &style),
        Stage::Moralized => {
            let u = unfold(sys, k);
            let mut seed = a.formula.atoms();
            for ag in a.formula.agents() {
                seed.extend(a.observables[ag].iter().copied());
            }
            let g = &u.model.dag;
            ugraph_dot(g, &moralize_within(g, &ancestors(g, &seed)), &style)
        }
    })
}

/// Check a spec in the given mode.
pub fn check(sys: &CheckedSystem, spec: &CheckedSpec, opts: &CheckOptions) -> Result<Verdict, CheckError> {
    check_formula(sys, &spec.name, &spec.formula, spec.time, opts)
}

pub fn check_optimized(sys: &CheckedSystem, spec: &CheckedSpec) -> Result<Verdict, CheckError> {
    check(sys, spec, &CheckOptions::new(Mode::Optimized))
}

pub fn check_baseline(sys: &CheckedSystem, spec: &CheckedSpec) -> Result<Verdict, CheckError> {
    check(sys, spec, &CheckOptions::new(Mode::Baseline))
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

/// BDD encoding of a reduced model: world set over `κ` plus primed copies.
pub struct WorldSpace {
    pub mgr: BddManager,
    pub var_of: BTreeMap<NodeId, BddVar>,
    pub prime: BTreeMap<BddVar, BddVar>,
    pub worlds: BddRef,
}

fn expr_bdd<A: Ord>(
    mgr: &mut BddManager,
    e: &Expr<A>,
    var_of: &BTreeMap<A, BddVar>,
) -> Result<BddRef, BddError> {
    Ok(match e {
        Expr::Const(b) => mgr.constant(*b),
        Expr::Var(n) => mgr.var(var_of[n])?,
        Expr::Not(a) => {
            let a = expr_bdd(mgr, a, var_of)?;
            mgr.not(a)?
        }
        Expr::Bin(op, a, b) => {
            let a = expr_bdd(mgr, a, var_of)?;
            let b = expr_bdd(mgr, b, var_of)?;
            mgr.apply(*op, a, b)?
        }
    })
}

/// Leaf elimination may drop `v_init` when no kept vertex depends on it,
/// so the initial condition is tested on its own.
fn init_satisfiable(sys: &CheckedSystem, deadline: Option<Instant>) -> Result<bool, CheckError> {
    if matches!(sys.init, Expr::Const(true)) {
        return Ok(true);
    }
    let mut mgr = BddManager::new();
    mgr.set_deadline(deadline);
    let mut var_of = BTreeMap::new();
    for v in sys.init.atoms() {
        var_of.insert(v, mgr.add_var(sys.var_name(v))?);
    }
    Ok(!expr_bdd(&mut mgr, &sys.init, &var_of)?.is_false())
}

/// Build the world set of the reduced model in `a`.
pub fn build_worlds(a: &Analysis, opts: &CheckOptions) -> Result<WorldSpace, CheckError> {
    let u = &a.unfolding;
    let g = &u.model.dag;
    let needs_prime = a.formula.knows_depth() > 0;

    // Boolean vertices: live non-init vertices, plus every initial-condition
    // component when v_init survives (its relation mentions all of them).
    let mut vertices: BTreeSet<NodeId> = g.vertices().filter(|n| Some(*n) != u.init_node).collect();
    let init_live = u.init_node.is_some_and(|n| g.is_alive(n));
    if init_live {
        vertices.extend(u.init_vars.iter().map(|v| u.snapshots[0][*v]));
    }

    // Conjuncts as (relation, vertex domain).
    let mut factors: Vec<(Option<&NodeRel>, BTreeSet<NodeId>, NodeId)> = vec![];
    for &n in &vertices {
        let rel = &u.model.relations[n];
        if let NodeRel::Equals(e) = rel {
            let mut d = e.atoms();
            d.insert(n);
            factors.push((Some(rel), d, n));
        }
    }
    if init_live {
        let d = u.init_vars.iter().map(|v| u.snapshots[0][*v]).collect();
        factors.push((u.init_node.map(|n| &u.model.relations[n]), d, u.init_node.unwrap()));
    }

    let order: Vec<NodeId> = match opts.order {
        VarOrder::MinDegree => {
            let domains: Vec<BTreeSet<String>> = factors
                .iter()
                .map(|(_, d, _)| d.iter().map(|n| format!("{n:08}")).collect())
                .chain(vertices.iter().map(|n| BTreeSet::from([format!("{n:08}")])))
                .collect();
            elimination_order(&domains, &BTreeSet::new())
                .iter()
                .map(|s| s.parse().unwrap())
                .collect()
        }
        VarOrder::Creation => vertices.iter().copied().collect(),
    };

    let mut mgr = BddManager::new();
    mgr.set_deadline(opts.deadline);
    let mut var_of = BTreeMap::new();
    let mut prime = BTreeMap::new();
    for &n in &order {
        let v = mgr.add_var(g.name(n))?;
        var_of.insert(n, v);
        if needs_prime && a.kappa.contains(&n) {
            let p = mgr.add_var(format!("{}'", g.name(n)))?;
            prime.insert(v, p);
        }
    }

    let mut buckets: Vec<(BddRef, BTreeSet<BddVar>)> = vec![];
    for (rel, _, n) in &factors {
        let f = match rel {
            Some(NodeRel::Equals(e)) => {
                let rhs = expr_bdd(&mut mgr, e, &var_of)?;
                let lhs = mgr.var(var_of[n])?;
                mgr.apply(BinOp::Iff, lhs, rhs)?
            }
            Some(NodeRel::Init(e)) => {
                let e = e.map(&mut |v| u.snapshots[0][*v]);
                expr_bdd(&mut mgr, &e, &var_of)?
            }
            _ => unreachable!(),
        };
        let s = mgr.support(f)?;
        buckets.push((f, s));
    }

    for &n in order.iter().filter(|n| !a.kappa.contains(n)) {
        let x = var_of[&n];
        let (with, without): (Vec<_>, Vec<_>) = buckets.into_iter().partition(|(_, s)| s.contains(&x));
        buckets = without;
        if with.is_empty() {
            continue;
        }
        let mut acc = mgr.constant(true);
        for (f, _) in &with[..with.len() - 1] {
            acc = mgr.and(acc, *f)?;
        }
        let r = mgr.and_exists(acc, with[with.len() - 1].0, &[x])?;
        let s = mgr.support(r)?;
        buckets.push((r, s));
    }
    let mut worlds = mgr.constant(true);
    for (f, _) in buckets {
        worlds = mgr.and(worlds, f)?;
    }
    if worlds.is_false() {
        return Err(CheckError::UnsatisfiableInit);
    }
    Ok(WorldSpace {
        mgr,
        var_of,
        prime,
        worlds,
    })
}

/// `{w ∈ worlds : ∀w' ∈ worlds. w ≈_obs w' ⇒ w' ∈ phi}`, computed as
/// `worlds ∧ ¬∃x'. (worlds' ∧ Eq_obs ∧ ¬phi')`.
pub fn eval_knows(
    mgr: &mut BddManager,
    worlds: BddRef,
    obs: &[BddVar],
    prime: &BTreeMap<BddVar, BddVar>,
    phi: BddRef,
) -> Result<BddRef, BddError> {
    let not_phi = mgr.not(phi)?;
    let bad = mgr.and(worlds, not_phi)?;
    let bad_p = mgr.rename(bad, prime)?;
    let mut eq = mgr.constant(true);
    for o in obs {
        let a = mgr.var(*o)?;
        let b = mgr.var(prime[o])?;
        let e = mgr.apply(BinOp::Iff, a, b)?;
        eq = mgr.and(eq, e)?;
    }
    let primed: Vec<BddVar> = prime.values().copied().collect();
    let reach = mgr.and_exists(bad_p, eq, &primed)?;
    let not_reach = mgr.not(reach)?;
    mgr.and(worlds, not_reach)
}

fn eval_formula(
    ws: &mut WorldSpace,
    f: &Formula<NodeId>,
    obs: &[BTreeSet<NodeId>],
) -> Result<BddRef, BddError> {
    Ok(match f {
        Formula::Const(b) => ws.mgr.constant(*b),
        Formula::Atom(n) => ws.mgr.var(ws.var_of[n])?,
        Formula::Not(g) => {
            let g = eval_formula(ws, g, obs)?;
            ws.mgr.not(g)?
        }
        Formula::Bin(op, a, b) => {
            let a = eval_formula(ws, a, obs)?;
            let b = eval_formula(ws, b, obs)?;
            ws.mgr.apply(*op, a, b)?
        }
        Formula::Knows(i, g) => {
            let phi = eval_formula(ws, g, obs)?;
            let o: Vec<BddVar> = obs[*i]
                .iter()
                .filter_map(|n| ws.var_of.get(n))
                .filter(|v| ws.prime.contains_key(v))
                .copied()
                .collect();
            eval_knows(&mut ws.mgr, ws.worlds, &o, &ws.prime, phi)?
        }
    })
}

/// Check `formula` at time `k`.
pub fn check_formula(
    sys: &CheckedSystem,
    name: &str,
    formula: &Formula<VarId>,
    k: usize,
    opts: &CheckOptions,
) -> Result<Verdict, CheckError> {
    let t0 = Instant::now();
    if !init_satisfiable(sys, opts.deadline)? {
        return Err(CheckError::UnsatisfiableInit);
    }
    let a = analyze(sys, formula, k, opts.mode)?;
    let t1 = Instant::now();
    let mut ws = build_worlds(&a, opts)?;
    let t2 = Instant::now();
    let phi = eval_formula(&mut ws, &a.formula, &a.observables)?;
    let not_phi = ws.mgr.not(phi)?;
    let bad = ws.mgr.and(ws.worlds, not_phi)?;
    let t3 = Instant::now();

    let u = &a.unfolding;
    let counterexample = ws.mgr.any_sat(bad)?.map(|path| {
        let path: BTreeMap<BddVar, bool> = path.into_iter().collect();
        u.model
            .dag
            .sorted_by_name(a.kappa.iter().copied())
            .into_iter()
            .map(|n| {
                let indexed = u.node_name(n).to_string();
                CexEntry {
                    var: u.timed_names(n).into_iter().next().unwrap_or_else(|| indexed.clone()),
                    indexed,
                    value: path.get(&ws.var_of[&n]).copied(),
                }
            })
            .collect()
    });

    let reduced = a.reduced();
    let init_live = u.init_node.is_some_and(|n| reduced.contains(&n));
    let stats = ReductionStats {
        total_nodes: a.total_nodes,
        aliased: u.aliased,
        kappa: a.kappa.len(),
        leaf_removed: a.removed.len(),
        quantified: reduced.len() - a.kappa.len(),
        reduced_vertices: reduced.len(),
        reduced_vertices_without_init: reduced.len() - init_live as usize,
        kept_vars: a.kappa.len(),
        bdd_vars: ws.mgr.num_vars(),
        worlds_bdd_nodes: ws.mgr.node_count(ws.worlds),
        store_nodes: ws.mgr.store_size(),
        timings: Timings {
            unfold_ms: ms(a.unfold_time),
            analyze_ms: ms(t1 - t0 - a.unfold_time),
            build_ms: ms(t2 - t1),
            check_ms: ms(t3 - t2),
        },
    };
    Ok(Verdict {
        spec: name.to_string(),
        mode: opts.mode,
        holds: bad.is_false(),
        counterexample,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::load_system;

    const SMALL: &str = "x : Bool\ny : Bool\nz : Bool\n\
        agent A \"p\" (x, y, z)\n\
        protocol \"p\" (a : observable Bool, b : Bool, c : Bool)\n\
        begin <| c := a xor b |>; <| b := c |> end\n";

    #[test]
    fn propositional_spec() {
        let sys = load_system(&format!("{SMALL}spec_spr = X 1 z <=> (x xor y)")).unwrap();
        let v = check_optimized(&sys, &sys.specs[0]).unwrap();
        assert!(v.holds);
        assert!(v.counterexample.is_none());
        let b = check_baseline(&sys, &sys.specs[0]).unwrap();
        assert_eq!(b.stats.kappa, v.stats.kappa);
    }

    #[test]
    fn knowledge_and_counterexample() {
        let sys = load_system(&format!("{SMALL}spec_spr = X 2 Knows A y")).unwrap();
        let v = check_optimized(&sys, &sys.specs[0]).unwrap();
        assert!(!v.holds);
        let cex = v.counterexample.unwrap();
        // y@2 aliases z@1, the first timed name of node z^1
        assert!(cex.iter().any(|e| e.var == "z@1" && e.indexed == "z^1"));
        let st = &v.stats;
        assert_eq!(st.leaf_removed + st.kept_vars + st.quantified, st.total_nodes);
    }

    #[test]
    fn knowledge_of_own_observation() {
        let sys = load_system(&format!("{SMALL}spec_spr = X 2 Knows A (x \\/ neg x) /\\ Knows A x => x")).unwrap();
        assert!(check_optimized(&sys, &sys.specs[0]).unwrap().holds);
        let sys = load_system(&format!("{SMALL}spec_spr = X 0 Knows A x \\/ Knows A neg x")).unwrap();
        assert!(check_optimized(&sys, &sys.specs[0]).unwrap().holds);
    }

    #[test]
    fn unsatisfiable_init() {
        let sys = load_system("x : Bool\ninit_cond = x /\\ neg x\nspec_spr = X 0 x").unwrap();
        assert_eq!(
            check_optimized(&sys, &sys.specs[0]).unwrap_err(),
            CheckError::UnsatisfiableInit
        );
    }

    #[test]
    fn unsatisfiable_init_survives_leaf_elimination() {
        let src = "g : Bool\ninit_cond = g <=> neg g\nagent A \"p\" (g)\nspec_spr = X 1 True\n\
                   protocol \"p\" (x : Bool)\nbegin\n<| rand(x) |>\nend\n";
        let sys = load_system(src).unwrap();
        for mode in [Mode::Optimized, Mode::Baseline] {
            let r = check(&sys, &sys.specs[0], &CheckOptions::new(mode));
            assert_eq!(r.unwrap_err(), CheckError::UnsatisfiableInit);
        }
    }

    #[test]
    fn knows_with_identity_and_empty_observation() {
        let mut m = BddManager::new();
        let x = m.add_var("x").unwrap();
        let xp = m.add_var("x'").unwrap();
        let y = m.add_var("y").unwrap();
        let yp = m.add_var("y'").unwrap();
        let prime = BTreeMap::from([(x, xp), (y, yp)]);
        let vx = m.var(x).unwrap();
        let vy = m.var(y).unwrap();
        let worlds = m.or(vx, vy).unwrap();
        let all = eval_knows(&mut m, worlds, &[x, y], &prime, vx).unwrap();
        assert_eq!(all, m.and(worlds, vx).unwrap());
        let none = eval_knows(&mut m, worlds, &[], &prime, vx).unwrap();
        assert!(none.is_false());
    }

    #[test]
    fn timeout_is_reported() {
        let sys = load_system(&format!("{SMALL}spec_spr = X 2 Knows A y")).unwrap();
        let opts = CheckOptions {
            deadline: Some(Instant::now()),
            ..Default::default()
        };
        assert_eq!(check(&sys, &sys.specs[0], &opts).unwrap_err(), CheckError::Timeout);
    }
}
