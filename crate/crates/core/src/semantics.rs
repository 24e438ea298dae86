//! Explicit-state interpreter for straightline joint protocols.
//!
//! This is the brute-force reference for the symbolic pipeline: it
//! enumerates initial states and runs, builds the timed-variable epistemic
//! structure, and evaluates specifications by direct recursion.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::Hash;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;
use thiserror::Error;

use crate::epistemic::Evs;
use crate::logic::{Expr, Formula};
use crate::script::{CheckedSpec, CheckedSystem, Command, VarId};

/// Default cap on the number of initial states the oracle will enumerate.
pub const DEFAULT_BRANCH_CAP: u64 = 1 << 24;

/// Initial-condition variable sets larger than this are not enumerated.
const MAX_INIT_VARS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("the initial condition is unsatisfiable")]
    UnsatisfiableInit,
    #[error("refusing to enumerate {branches} initial states (cap {cap})")]
    ExplosionGuard { branches: String, cap: u64 },
    #[error("time {time} exceeds the run horizon {horizon}")]
    BeyondHorizon { time: usize, horizon: usize },
}

/// A total assignment of the flattened universe, packed into words.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    words: Vec<u64>,
    len: usize,
}

impl State {
    pub fn zeros(len: usize) -> Self {
        State {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = State::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, v: VarId) -> bool {
        (self.words[v / 64] >> (v % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, v: VarId, b: bool) {
        let m = 1u64 << (v % 64);
        if b {
            self.words[v / 64] |= m;
        } else {
            self.words[v / 64] &= !m;
        }
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    fn eval(&self, e: &Expr<VarId>) -> bool {
        e.eval(&mut |v| self.get(*v))
    }
}

/// A sequence of states `s_0 … s_k`.
pub type Run = Vec<State>;

/// All terminal states reachable by executing `code` from `s`.
///
/// Assignments update sequentially; each `rand` doubles the branch set.
pub fn exec_code<'a>(
    s: &State,
    code: impl IntoIterator<Item = &'a Command>,
) -> BTreeSet<State> {
    let mut states = vec![s.clone()];
    for cmd in code {
        match cmd {
            Command::Assign(v, e) => {
                for st in &mut states {
                    let b = st.eval(e);
                    st.set(*v, b);
                }
            }
            Command::Rand(v) => {
                let mut next = Vec::with_capacity(states.len() * 2);
                for st in states {
                    let mut one = st.clone();
                    one.set(*v, true);
                    let mut zero = st;
                    zero.set(*v, false);
                    next.push(zero);
                    next.push(one);
                }
                states = next;
            }
        }
    }
    states.into_iter().collect()
}

/// One clock tick: every agent's `t`-th action in declaration order,
/// followed by the environment transitions.
pub fn tick(s: &State, t: usize, sys: &CheckedSystem) -> BTreeSet<State> {
    exec_code(s, sys.tick_code(t))
}

/// Assignments over `vars` satisfying `init`, each as a list of values.
fn init_models(init: &Expr<VarId>, vars: &[VarId]) -> Vec<Vec<bool>> {
    let pos: BTreeMap<VarId, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut out = vec![];
    for bits in 0u64..(1u64 << vars.len()) {
        if init.eval(&mut |v| (bits >> pos[v]) & 1 == 1) {
            out.push((0..vars.len()).map(|i| (bits >> i) & 1 == 1).collect());
        }
    }
    out
}

/// Enumerate initial states: every assignment of `free` on top of each
/// model of the initial condition. `fixed` variables stay false.
fn initial_states(
    sys: &CheckedSystem,
    free: &[VarId],
    cap: u64,
) -> Result<Vec<State>, SemanticsError> {
    let init_vars: Vec<VarId> = sys.init.atoms().into_iter().collect();
    if init_vars.len() > MAX_INIT_VARS {
        return Err(SemanticsError::ExplosionGuard {
            branches: format!("2^{} initial-condition assignments", init_vars.len()),
            cap,
        });
    }
    let models = init_models(&sys.init, &init_vars);
    if models.is_empty() {
        return Err(SemanticsError::UnsatisfiableInit);
    }
    let total = (models.len() as u128) << free.len().min(100);
    if free.len() >= 64 || total > cap as u128 {
        return Err(SemanticsError::ExplosionGuard {
            branches: if free.len() >= 64 {
                format!("{} x 2^{}", models.len(), free.len())
            } else {
                total.to_string()
            },
            cap,
        });
    }
    let mut out = Vec::with_capacity(total as usize);
    for m in &models {
        let mut base = State::zeros(sys.num_vars());
        for (v, b) in init_vars.iter().zip(m) {
            base.set(*v, *b);
        }
        for bits in 0u64..(1u64 << free.len()) {
            let mut s = base.clone();
            for (i, v) in free.iter().enumerate() {
                s.set(*v, (bits >> i) & 1 == 1);
            }
            out.push(s);
        }
    }
    Ok(out)
}

fn unconstrained(sys: &CheckedSystem) -> Vec<VarId> {
    let init_vars = sys.init.atoms();
    (0..sys.num_vars()).filter(|v| !init_vars.contains(v)).collect()
}

/// Extend each partial run by one tick, branching on `rand`.
fn runs_from(sys: &CheckedSystem, s0: State, k: usize, out: &mut impl FnMut(&[State])) {
    fn go(
        sys: &CheckedSystem,
        run: &mut Vec<State>,
        k: usize,
        out: &mut impl FnMut(&[State]),
    ) {
        let t = run.len() - 1;
        if t == k {
            out(run);
            return;
        }
        let succ = tick(run.last().unwrap(), t, sys);
        for s in succ {
            run.push(s);
            go(sys, run, k, out);
            run.pop();
        }
    }
    let mut run = vec![s0];
    go(sys, &mut run, k, out);
}

/// Every run of length `k`, starting from every state satisfying the
/// initial condition (unconstrained variables range freely).
pub fn generate_runs(
    sys: &CheckedSystem,
    k: usize,
    cap: u64,
) -> Result<BTreeSet<Run>, SemanticsError> {
    if k > sys.horizon {
        return Err(SemanticsError::BeyondHorizon {
            time: k,
            horizon: sys.horizon,
        });
    }
    let mut runs = BTreeSet::new();
    for s0 in initial_states(sys, &unconstrained(sys), cap)? {
        runs_from(sys, s0, k, &mut |r| {
            runs.insert(r.to_vec());
        });
    }
    Ok(runs)
}

/// Name of the timed variable `v@t`.
pub fn timed_name(sys: &CheckedSystem, v: VarId, t: usize) -> String {
    format!("{}@{t}", sys.var_name(v))
}

/// Index of `v@t` among the variables of [`oracle_evs`].
pub fn timed_index(sys: &CheckedSystem, v: VarId, t: usize) -> usize {
    t * sys.num_vars() + v
}

/// The epistemic variable structure over timed variables `v@t`, `t ≤ k`,
/// with synchronous perfect recall observation sets.
pub fn oracle_evs(sys: &CheckedSystem, k: usize, cap: u64) -> Result<Evs, SemanticsError> {
    let runs = generate_runs(sys, k, cap)?;
    let n = sys.num_vars();
    let vars: Vec<String> = (0..=k)
        .flat_map(|t| (0..n).map(move |v| (t, v)))
        .map(|(t, v)| timed_name(sys, v, t))
        .collect();
    let worlds: BTreeSet<Vec<bool>> = runs
        .iter()
        .map(|r| r.iter().flat_map(|s| s.to_bools()).collect())
        .collect();
    let observables = sys
        .agents
        .iter()
        .map(|a| {
            (0..=k)
                .flat_map(|t| a.observables.iter().map(move |v| timed_index(sys, *v, t)))
                .collect()
        })
        .collect();
    Ok(Evs::new(vars, worlds, observables))
}

/// Result of an explicit-state check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleVerdict {
    pub holds: bool,
    /// A falsifying world, restricted to the timed variables the oracle
    /// tracked.
    pub witness: Option<BTreeMap<String, bool>>,
    pub worlds: usize,
}

#[derive(Clone, Debug)]
pub struct OracleOptions {
    pub branch_cap: u64,
    /// Fix to false every variable whose initial value is never read, is
    /// not observed by an agent whose knowledge the formula mentions, and
    /// is not mentioned by the formula before it is first overwritten.
    pub prune_dead_inits: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            branch_cap: DEFAULT_BRANCH_CAP,
            prune_dead_inits: true,
        }
    }
}

/// Variables whose initial value cannot influence the verdict.
///
/// A variable qualifies when it is unconstrained by the initial condition,
/// no code reads it before it is first written, and none of its timed
/// copies up to and including the first write time is tracked.
fn dead_initial_vars(
    sys: &CheckedSystem,
    k: usize,
    tracked: &BTreeSet<(usize, VarId)>,
) -> BTreeSet<VarId> {
    let n = sys.num_vars();
    let mut written_at: Vec<Option<usize>> = vec![None; n];
    let mut read_early = vec![false; n];
    for t in 0..k {
        for cmd in sys.tick_code(t) {
            if let Command::Assign(_, e) = cmd {
                e.for_each_atom(&mut |v| {
                    if written_at[*v].is_none() {
                        read_early[*v] = true;
                    }
                });
            }
            let target = cmd.target();
            if written_at[target].is_none() {
                written_at[target] = Some(t);
            }
        }
    }
    let init_vars = sys.init.atoms();
    (0..n)
        .filter(|v| !init_vars.contains(v) && !read_early[*v])
        .filter(|v| {
            // the initial value is visible at times 0..=w
            let last = written_at[*v].unwrap_or(k).min(k);
            (0..=last).all(|t| !tracked.contains(&(t, *v)))
        })
        .collect()
}

trait WorldKey: Hash + Eq + Clone {
    fn zero(words: usize) -> Self;
    fn set(&mut self, i: usize);
    fn get(&self, i: usize) -> bool;
    fn and(&self, mask: &Self) -> Self;
}

impl WorldKey for u128 {
    fn zero(_: usize) -> Self {
        0
    }
    fn set(&mut self, i: usize) {
        *self |= 1u128 << i;
    }
    fn get(&self, i: usize) -> bool {
        (self >> i) & 1 == 1
    }
    fn and(&self, mask: &Self) -> Self {
        self & mask
    }
}

impl WorldKey for Box<[u64]> {
    fn zero(words: usize) -> Self {
        vec![0; words].into_boxed_slice()
    }
    fn set(&mut self, i: usize) {
        self[i / 64] |= 1 << (i % 64);
    }
    fn get(&self, i: usize) -> bool {
        (self[i / 64] >> (i % 64)) & 1 == 1
    }
    fn and(&self, mask: &Self) -> Self {
        self.iter().zip(mask.iter()).map(|(a, b)| a & b).collect()
    }
}

/// Check `spec` by explicit enumeration with default options.
pub fn oracle_check(sys: &CheckedSystem, spec: &CheckedSpec) -> Result<OracleVerdict, SemanticsError> {
    oracle_check_with(sys, &spec.formula, spec.time, &OracleOptions::default())
}

/// Check `formula` at time `k` by explicit enumeration of runs.
///
/// Worlds are projected onto the timed variables of the formula together
/// with the full observation histories of every agent whose knowledge the
/// formula mentions; projecting onto a superset of those variables does
/// not change satisfaction.
pub fn oracle_check_with(
    sys: &CheckedSystem,
    formula: &Formula<VarId>,
    k: usize,
    opts: &OracleOptions,
) -> Result<OracleVerdict, SemanticsError> {
    if k > sys.horizon {
        return Err(SemanticsError::BeyondHorizon {
            time: k,
            horizon: sys.horizon,
        });
    }
    let mut tracked: BTreeSet<(usize, VarId)> = formula.atoms().into_iter().map(|v| (k, v)).collect();
    for a in formula.agents() {
        for v in &sys.agents[a].observables {
            tracked.extend((0..=k).map(|t| (t, *v)));
        }
    }
    let positions: Vec<(usize, VarId)> = tracked.iter().copied().collect();
    if positions.len() <= 128 {
        oracle_core::<u128>(sys, formula, k, opts, &tracked, &positions)
    } else {
        oracle_core::<Box<[u64]>>(sys, formula, k, opts, &tracked, &positions)
    }
}

fn oracle_core<K: WorldKey>(
    sys: &CheckedSystem,
    formula: &Formula<VarId>,
    k: usize,
    opts: &OracleOptions,
    tracked: &BTreeSet<(usize, VarId)>,
    positions: &[(usize, VarId)],
) -> Result<OracleVerdict, SemanticsError> {
    let words = positions.len().div_ceil(64).max(1);
    let dead = if opts.prune_dead_inits {
        dead_initial_vars(sys, k, tracked)
    } else {
        BTreeSet::new()
    };
    let free: Vec<VarId> = unconstrained(sys)
        .into_iter()
        .filter(|v| !dead.contains(v))
        .collect();
    let by_time: Vec<Vec<(usize, VarId)>> = (0..=k)
        .map(|t| {
            positions
                .iter()
                .enumerate()
                .filter(|(_, (pt, _))| *pt == t)
                .map(|(i, (_, v))| (i, *v))
                .collect()
        })
        .collect();

    let mut seen: FxHashSet<K> = FxHashSet::default();
    let mut worlds: Vec<K> = vec![];
    for s0 in initial_states(sys, &free, opts.branch_cap)? {
        runs_from(sys, s0, k, &mut |run| {
            let mut key = K::zero(words);
            for (t, s) in run.iter().enumerate() {
                for &(i, v) in &by_time[t] {
                    if s.get(v) {
                        key.set(i);
                    }
                }
            }
            if seen.insert(key.clone()) {
                worlds.push(key);
            }
        });
    }
    drop(seen);

    let col: FxHashMap<(usize, VarId), usize> =
        positions.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let sat = eval_worlds(sys, formula, k, &worlds, &col, words);
    let failing = sat.iter().position(|b| !b);
    let witness = failing.map(|w| {
        positions
            .iter()
            .enumerate()
            .map(|(i, (t, v))| (timed_name(sys, *v, *t), worlds[w].get(i)))
            .collect()
    });
    Ok(OracleVerdict {
        holds: failing.is_none(),
        witness,
        worlds: worlds.len(),
    })
}

fn eval_worlds<K: WorldKey>(
    sys: &CheckedSystem,
    f: &Formula<VarId>,
    k: usize,
    worlds: &[K],
    col: &FxHashMap<(usize, VarId), usize>,
    words: usize,
) -> Vec<bool> {
    match f {
        Formula::Const(b) => vec![*b; worlds.len()],
        Formula::Atom(v) => {
            let i = col[&(k, *v)];
            worlds.iter().map(|w| w.get(i)).collect()
        }
        Formula::Not(g) => eval_worlds(sys, g, k, worlds, col, words)
            .into_iter()
            .map(|b| !b)
            .collect(),
        Formula::Bin(op, a, b) => {
            let x = eval_worlds(sys, a, k, worlds, col, words);
            let y = eval_worlds(sys, b, k, worlds, col, words);
            x.into_iter().zip(y).map(|(p, q)| op.apply(p, q)).collect()
        }
        Formula::Knows(agent, g) => {
            let inner = eval_worlds(sys, g, k, worlds, col, words);
            let mut mask = K::zero(words);
            for v in &sys.agents[*agent].observables {
                for t in 0..=k {
                    mask.set(col[&(t, *v)]);
                }
            }
            let mut class_ok: FxHashMap<K, bool> = FxHashMap::default();
            for (w, ok) in worlds.iter().zip(&inner) {
                let e = class_ok.entry(w.and(&mask)).or_insert(true);
                *e &= *ok;
            }
            worlds.iter().map(|w| class_ok[&w.and(&mask)]).collect()
        }
    }
}
