//! Reduced ordered binary decision diagrams.
//!
//! A [`BddManager`] owns a node store with a unique table, so two
//! [`BddRef`]s from the same manager are equal exactly when they denote the
//! same function. Variables are ordered by registration. There are no
//! complement edges.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU32, Ordering};
use std::time::Instant;

use num_bigint::BigUint;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::logic::BinOp;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BddError {
    #[error("unknown BDD variable `{0}`")]
    UnknownVariable(String),
    #[error("BDD variable `{0}` is already registered")]
    DuplicateVariable(String),
    #[error("operands belong to different BDD managers")]
    ManagerMismatch,
    #[error("renaming does not preserve the variable order")]
    OrderConflict,
    #[error("function depends on variables outside the counting scope")]
    SupportExceedsScope,
    #[error("deadline exceeded")]
    Timeout,
}

/// A variable, identified by its level in the order.
pub type BddVar = u32;

/// A handle to a function stored in a manager.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BddRef {
    mgr: u32,
    node: u32,
}

impl BddRef {
    pub fn is_false(self) -> bool {
        self.node == FALSE
    }

    pub fn is_true(self) -> bool {
        self.node == TRUE
    }
}

const FALSE: u32 = 0;
const TRUE: u32 = 1;
const TERMINAL_LEVEL: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Node {
    level: u32,
    lo: u32,
    hi: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Bin(u8),
    Not,
    Exists,
    AndExists,
}

static NEXT_MANAGER: AtomicU32 = AtomicU32::new(1);

pub struct BddManager {
    id: u32,
    names: Vec<String>,
    by_name: FxHashMap<String, BddVar>,
    nodes: Vec<Node>,
    unique: FxHashMap<Node, u32>,
    cache: FxHashMap<(Op, u32, u32, u32), u32>,
    deadline: Option<Instant>,
    ticks: u32,
}

impl Default for BddManager {
    fn default() -> Self {
        Self::new()
    }
}

fn op_code(op: BinOp) -> u8 {
    match op {
        BinOp::And => 0,
        BinOp::Or => 1,
        BinOp::Xor => 2,
        BinOp::Iff => 3,
        BinOp::Implies => 4,
    }
}

impl BddManager {
    pub fn new() -> Self {
        let term = |v| Node {
            level: TERMINAL_LEVEL,
            lo: v,
            hi: v,
        };
        BddManager {
            id: NEXT_MANAGER.fetch_add(1, Ordering::Relaxed),
            names: vec![],
            by_name: FxHashMap::default(),
            nodes: vec![term(FALSE), term(TRUE)],
            unique: FxHashMap::default(),
            cache: FxHashMap::default(),
            deadline: None,
            ticks: 0,
        }
    }

    /// Abort operations with [`BddError::Timeout`] once `deadline` passes.
    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    /// Register a variable below all existing ones.
    pub fn add_var(&mut self, name: impl Into<String>) -> Result<BddVar, BddError> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(BddError::DuplicateVariable(name));
        }
        let v = self.names.len() as BddVar;
        self.by_name.insert(name.clone(), v);
        self.names.push(name);
        Ok(v)
    }

    pub fn var_by_name(&self, name: &str) -> Result<BddVar, BddError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| BddError::UnknownVariable(name.to_string()))
    }

    pub fn var_name(&self, v: BddVar) -> &str {
        &self.names[v as usize]
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    /// Nodes in the store, including both terminals.
    pub fn store_size(&self) -> usize {
        self.nodes.len()
    }

    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }

    fn wrap(&self, node: u32) -> BddRef {
        BddRef { mgr: self.id, node }
    }

    fn expired(&self) -> Result<(), BddError> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(BddError::Timeout),
            _ => Ok(()),
        }
    }

    fn own(&self, f: BddRef) -> Result<u32, BddError> {
        if f.mgr == self.id {
            Ok(f.node)
        } else {
            Err(BddError::ManagerMismatch)
        }
    }

    pub fn constant(&self, b: bool) -> BddRef {
        self.wrap(if b { TRUE } else { FALSE })
    }

    pub fn var(&mut self, v: BddVar) -> Result<BddRef, BddError> {
        if v as usize >= self.names.len() {
            return Err(BddError::UnknownVariable(format!("#{v}")));
        }
        let n = self.mk(v, FALSE, TRUE)?;
        Ok(self.wrap(n))
    }

    pub fn named_var(&mut self, name: &str) -> Result<BddRef, BddError> {
        let v = self.var_by_name(name)?;
        self.var(v)
    }

    fn level(&self, n: u32) -> u32 {
        self.nodes[n as usize].level
    }

    fn mk(&mut self, level: u32, lo: u32, hi: u32) -> Result<u32, BddError> {
        if lo == hi {
            return Ok(lo);
        }
        let node = Node { level, lo, hi };
        if let Some(&n) = self.unique.get(&node) {
            return Ok(n);
        }
        self.ticks = self.ticks.wrapping_add(1);
        if self.ticks.is_multiple_of(4096) {
            self.expired()?;
        }
        let n = self.nodes.len() as u32;
        self.nodes.push(node);
        self.unique.insert(node, n);
        Ok(n)
    }

    fn cofactors(&self, n: u32, level: u32) -> (u32, u32) {
        let node = self.nodes[n as usize];
        if node.level == level {
            (node.lo, node.hi)
        } else {
            (n, n)
        }
    }

    pub fn apply(&mut self, op: BinOp, f: BddRef, g: BddRef) -> Result<BddRef, BddError> {
        self.expired()?;
        let (a, b) = (self.own(f)?, self.own(g)?);
        let n = self.apply_rec(op, a, b)?;
        Ok(self.wrap(n))
    }

    pub fn and(&mut self, f: BddRef, g: BddRef) -> Result<BddRef, BddError> {
        self.apply(BinOp::And, f, g)
    }

    pub fn or(&mut self, f: BddRef, g: BddRef) -> Result<BddRef, BddError> {
        self.apply(BinOp::Or, f, g)
    }

    fn apply_rec(&mut self, op: BinOp, a: u32, b: u32) -> Result<u32, BddError> {
        if a <= TRUE && b <= TRUE {
            return Ok(op.apply(a == TRUE, b == TRUE) as u32);
        }
        match op {
            BinOp::And => {
                if a == FALSE || b == FALSE {
                    return Ok(FALSE);
                }
                if a == TRUE || a == b {
                    return Ok(b);
                }
                if b == TRUE {
                    return Ok(a);
                }
            }
            BinOp::Or => {
                if a == TRUE || b == TRUE {
                    return Ok(TRUE);
                }
                if a == FALSE || a == b {
                    return Ok(b);
                }
                if b == FALSE {
                    return Ok(a);
                }
            }
            BinOp::Xor => {
                if a == b {
                    return Ok(FALSE);
                }
                if a == FALSE {
                    return Ok(b);
                }
                if b == FALSE {
                    return Ok(a);
                }
            }
            BinOp::Iff => {
                if a == b {
                    return Ok(TRUE);
                }
                if a == TRUE {
                    return Ok(b);
                }
                if b == TRUE {
                    return Ok(a);
                }
            }
            BinOp::Implies => {
                if a == FALSE || b == TRUE || a == b {
                    return Ok(TRUE);
                }
                if a == TRUE {
                    return Ok(b);
                }
            }
        }
        let (a, b) = match op {
            BinOp::Implies => (a, b),
            _ => (a.min(b), a.max(b)),
        };
        let key = (Op::Bin(op_code(op)), a, b, 0);
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let level = self.level(a).min(self.level(b));
        let (a0, a1) = self.cofactors(a, level);
        let (b0, b1) = self.cofactors(b, level);
        let lo = self.apply_rec(op, a0, b0)?;
        let hi = self.apply_rec(op, a1, b1)?;
        let r = self.mk(level, lo, hi)?;
        self.cache.insert(key, r);
        Ok(r)
    }

    pub fn not(&mut self, f: BddRef) -> Result<BddRef, BddError> {
        self.expired()?;
        let a = self.own(f)?;
        let n = self.not_rec(a)?;
        Ok(self.wrap(n))
    }

    fn not_rec(&mut self, a: u32) -> Result<u32, BddError> {
        if a <= TRUE {
            return Ok(1 - a);
        }
        let key = (Op::Not, a, 0, 0);
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let Node { level, lo, hi } = self.nodes[a as usize];
        let lo = self.not_rec(lo)?;
        let hi = self.not_rec(hi)?;
        let r = self.mk(level, lo, hi)?;
        self.cache.insert(key, r);
        Ok(r)
    }

    /// The conjunction of the given variables, used as a quantifier set.
    fn cube(&mut self, vars: &[BddVar]) -> Result<u32, BddError> {
        let mut vs: Vec<BddVar> = vars.to_vec();
        vs.sort_unstable();
        vs.dedup();
        let mut c = TRUE;
        for v in vs.into_iter().rev() {
            if v as usize >= self.names.len() {
                return Err(BddError::UnknownVariable(format!("#{v}")));
            }
            c = self.mk(v, FALSE, c)?;
        }
        Ok(c)
    }

    /// `∃vars. f`.
    pub fn exists(&mut self, f: BddRef, vars: &[BddVar]) -> Result<BddRef, BddError> {
        self.expired()?;
        let a = self.own(f)?;
        let c = self.cube(vars)?;
        let n = self.exists_rec(a, c)?;
        Ok(self.wrap(n))
    }

    /// `∀vars. f`.
    pub fn forall(&mut self, f: BddRef, vars: &[BddVar]) -> Result<BddRef, BddError> {
        let nf = self.not(f)?;
        let e = self.exists(nf, vars)?;
        self.not(e)
    }

    fn exists_rec(&mut self, a: u32, mut c: u32) -> Result<u32, BddError> {
        if a <= TRUE {
            return Ok(a);
        }
        let level = self.level(a);
        while c != TRUE && self.level(c) < level {
            c = self.nodes[c as usize].hi;
        }
        if c == TRUE {
            return Ok(a);
        }
        let key = (Op::Exists, a, c, 0);
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let Node { lo, hi, .. } = self.nodes[a as usize];
        let r = if self.level(c) == level {
            let next = self.nodes[c as usize].hi;
            let l = self.exists_rec(lo, next)?;
            if l == TRUE {
                TRUE
            } else {
                let h = self.exists_rec(hi, next)?;
                self.apply_rec(BinOp::Or, l, h)?
            }
        } else {
            let l = self.exists_rec(lo, c)?;
            let h = self.exists_rec(hi, c)?;
            self.mk(level, l, h)?
        };
        self.cache.insert(key, r);
        Ok(r)
    }

    /// `∃vars. (f ∧ g)` without building the conjunction first.
    pub fn and_exists(&mut self, f: BddRef, g: BddRef, vars: &[BddVar]) -> Result<BddRef, BddError> {
        self.expired()?;
        let (a, b) = (self.own(f)?, self.own(g)?);
        let c = self.cube(vars)?;
        let n = self.and_exists_rec(a, b, c)?;
        Ok(self.wrap(n))
    }

    fn and_exists_rec(&mut self, a: u32, b: u32, mut c: u32) -> Result<u32, BddError> {
        if a == FALSE || b == FALSE {
            return Ok(FALSE);
        }
        if a == TRUE && b == TRUE {
            return Ok(TRUE);
        }
        if a == TRUE || a == b {
            return self.exists_rec(b, c);
        }
        if b == TRUE {
            return self.exists_rec(a, c);
        }
        let level = self.level(a).min(self.level(b));
        while c != TRUE && self.level(c) < level {
            c = self.nodes[c as usize].hi;
        }
        if c == TRUE {
            return self.apply_rec(BinOp::And, a, b);
        }
        let (a, b) = (a.min(b), a.max(b));
        let key = (Op::AndExists, a, b, c);
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let (a0, a1) = self.cofactors(a, level);
        let (b0, b1) = self.cofactors(b, level);
        let r = if self.level(c) == level {
            let next = self.nodes[c as usize].hi;
            let l = self.and_exists_rec(a0, b0, next)?;
            if l == TRUE {
                TRUE
            } else {
                let h = self.and_exists_rec(a1, b1, next)?;
                self.apply_rec(BinOp::Or, l, h)?
            }
        } else {
            let l = self.and_exists_rec(a0, b0, c)?;
            let h = self.and_exists_rec(a1, b1, c)?;
            self.mk(level, l, h)?
        };
        self.cache.insert(key, r);
        Ok(r)
    }

    /// Variables `f` depends on.
    pub fn support(&self, f: BddRef) -> Result<BTreeSet<BddVar>, BddError> {
        let a = self.own(f)?;
        let mut seen = BTreeSet::new();
        let mut out = BTreeSet::new();
        let mut stack = vec![a];
        while let Some(n) = stack.pop() {
            if n <= TRUE || !seen.insert(n) {
                continue;
            }
            let node = self.nodes[n as usize];
            out.insert(node.level);
            stack.push(node.lo);
            stack.push(node.hi);
        }
        Ok(out)
    }

    /// Internal nodes reachable from `f`.
    pub fn node_count(&self, f: BddRef) -> usize {
        let mut seen = BTreeSet::new();
        let mut stack = vec![f.node];
        while let Some(n) = stack.pop() {
            if n > TRUE && seen.insert(n) {
                let node = self.nodes[n as usize];
                stack.push(node.lo);
                stack.push(node.hi);
            }
        }
        seen.len()
    }

    /// Substitute variables. The mapping must be injective and, restricted
    /// to the support of `f`, must keep the relative order of variables.
    pub fn rename(&mut self, f: BddRef, mapping: &BTreeMap<BddVar, BddVar>) -> Result<BddRef, BddError> {
        let a = self.own(f)?;
        for v in mapping.values() {
            if *v as usize >= self.names.len() {
                return Err(BddError::UnknownVariable(format!("#{v}")));
            }
        }
        let targets: BTreeSet<BddVar> = mapping.values().copied().collect();
        if targets.len() != mapping.len() {
            return Err(BddError::OrderConflict);
        }
        let support = self.support(f)?;
        let image: Vec<BddVar> = support
            .iter()
            .map(|v| mapping.get(v).copied().unwrap_or(*v))
            .collect();
        if image.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BddError::OrderConflict);
        }
        let mut memo: FxHashMap<u32, u32> = FxHashMap::default();
        let n = self.rename_rec(a, mapping, &mut memo)?;
        Ok(self.wrap(n))
    }

    fn rename_rec(
        &mut self,
        a: u32,
        mapping: &BTreeMap<BddVar, BddVar>,
        memo: &mut FxHashMap<u32, u32>,
    ) -> Result<u32, BddError> {
        if a <= TRUE {
            return Ok(a);
        }
        if let Some(&r) = memo.get(&a) {
            return Ok(r);
        }
        let Node { level, lo, hi } = self.nodes[a as usize];
        let lo = self.rename_rec(lo, mapping, memo)?;
        let hi = self.rename_rec(hi, mapping, memo)?;
        let r = self.mk(mapping.get(&level).copied().unwrap_or(level), lo, hi)?;
        memo.insert(a, r);
        Ok(r)
    }

    pub fn eval(&self, f: BddRef, assignment: &mut impl FnMut(BddVar) -> bool) -> Result<bool, BddError> {
        let mut n = self.own(f)?;
        while n > TRUE {
            let node = self.nodes[n as usize];
            n = if assignment(node.level) { node.hi } else { node.lo };
        }
        Ok(n == TRUE)
    }

    /// Number of assignments to `over` satisfying `f`.
    pub fn sat_count(&self, f: BddRef, over: &[BddVar]) -> Result<BigUint, BddError> {
        let a = self.own(f)?;
        let over: BTreeSet<BddVar> = over.iter().copied().collect();
        if !self.support(f)?.is_subset(&over) {
            return Err(BddError::SupportExceedsScope);
        }
        let levels: Vec<BddVar> = over.into_iter().collect();
        let rank = |lvl: u32| -> usize {
            if lvl == TERMINAL_LEVEL {
                levels.len()
            } else {
                levels.partition_point(|x| *x < lvl)
            }
        };
        fn go(
            m: &BddManager,
            n: u32,
            rank: &impl Fn(u32) -> usize,
            memo: &mut FxHashMap<u32, BigUint>,
        ) -> BigUint {
            if n == FALSE {
                return BigUint::from(0u8);
            }
            if n == TRUE {
                return BigUint::from(1u8);
            }
            if let Some(c) = memo.get(&n) {
                return c.clone();
            }
            let node = m.nodes[n as usize];
            let r = rank(node.level);
            let mut total = BigUint::from(0u8);
            for child in [node.lo, node.hi] {
                let gap = rank(m.level(child)) - r - 1;
                total += go(m, child, rank, memo) << gap;
            }
            memo.insert(n, total.clone());
            total
        }
        let mut memo = FxHashMap::default();
        Ok(go(self, a, &rank, &mut memo) << rank(self.level(a)))
    }

    /// One satisfying partial assignment (variables on a path to `true`),
    /// preferring `false` branches.
    pub fn any_sat(&self, f: BddRef) -> Result<Option<Vec<(BddVar, bool)>>, BddError> {
        let mut n = self.own(f)?;
        if n == FALSE {
            return Ok(None);
        }
        let mut out = vec![];
        while n > TRUE {
            let node = self.nodes[n as usize];
            if node.lo != FALSE {
                out.push((node.level, false));
                n = node.lo;
            } else {
                out.push((node.level, true));
                n = node.hi;
            }
        }
        Ok(Some(out))
    }

    /// Check reducedness, ordering and the unique table over the whole store.
    pub fn audit(&self) -> Result<(), String> {
        for (i, node) in self.nodes.iter().enumerate().skip(2) {
            if node.lo == node.hi {
                return Err(format!("node {i} has identical children"));
            }
            for c in [node.lo, node.hi] {
                if self.level(c) <= node.level {
                    return Err(format!("node {i} violates the order"));
                }
            }
            if self.unique.get(node) != Some(&(i as u32)) {
                return Err(format!("node {i} is missing from the unique table"));
            }
        }
        if self.unique.len() != self.nodes.len() - 2 {
            return Err("duplicate triples in the store".into());
        }
        Ok(())
    }

    /// A DOT rendering of `f` for debugging.
    pub fn to_dot(&self, f: BddRef) -> String {
        let mut out = String::from("digraph bdd {\n  t0 [label=\"0\", shape=box];\n  t1 [label=\"1\", shape=box];\n");
        let mut seen = BTreeSet::new();
        let mut stack = vec![f.node];
        let id = |n: u32| if n <= TRUE { format!("t{n}") } else { format!("n{n}") };
        while let Some(n) = stack.pop() {
            if n <= TRUE || !seen.insert(n) {
                continue;
            }
            let node = self.nodes[n as usize];
            let _ = writeln!(out, "  n{n} [label=\"{}\"];", self.names[node.level as usize]);
            let _ = writeln!(out, "  n{n} -> {} [style=dashed];", id(node.lo));
            let _ = writeln!(out, "  n{n} -> {};", id(node.hi));
            stack.push(node.lo);
            stack.push(node.hi);
        }
        if f.node <= TRUE {
            let _ = writeln!(out, "  root -> t{};", f.node);
        }
        out.push_str("}\n");
        out
    }
}
