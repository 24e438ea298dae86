//! The valuation algebra of relational structures.
//!
//! A relational structure is a set of assignments over a finite set of
//! variables, each ranging over its own finite frame `{0..size}`.
//! Combination is the natural join and marginalization is projection.

use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelationalError {
    #[error("variable `{var}` has frame size {left} on one side and {right} on the other")]
    FrameMismatch { var: String, left: u32, right: u32 },
    #[error("elimination order must be a permutation of {expected:?}, got {got:?}")]
    BadOrder {
        expected: BTreeSet<String>,
        got: Vec<String>,
    },
}

/// A relation `(A, V)`. Columns are kept in name order and rows are
/// distinct and sorted, so equality is set equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RelationalStructure {
    vars: Vec<String>,
    frames: Vec<u32>,
    rows: BTreeSet<Vec<u32>>,
}

impl RelationalStructure {
    /// Build from columns in any order. Rows are reordered to match.
    pub fn new(
        columns: Vec<(String, u32)>,
        rows: impl IntoIterator<Item = Vec<u32>>,
    ) -> Self {
        let mut perm: Vec<usize> = (0..columns.len()).collect();
        perm.sort_by(|a, b| columns[*a].0.cmp(&columns[*b].0));
        for w in perm.windows(2) {
            assert_ne!(columns[w[0]].0, columns[w[1]].0, "duplicate column");
        }
        let vars = perm.iter().map(|i| columns[*i].0.clone()).collect();
        let frames: Vec<u32> = perm.iter().map(|i| columns[*i].1).collect();
        assert!(frames.iter().all(|f| *f > 0), "empty frame");
        let rows = rows
            .into_iter()
            .map(|r| {
                assert_eq!(r.len(), perm.len());
                let r: Vec<u32> = perm.iter().map(|i| r[*i]).collect();
                assert!(r.iter().zip(&frames).all(|(v, f)| v < f));
                r
            })
            .collect();
        RelationalStructure { vars, frames, rows }
    }

    /// A boolean relation from `(name, value)` rows.
    pub fn boolean(vars: &[&str], rows: &[&[bool]]) -> Self {
        Self::new(
            vars.iter().map(|v| (v.to_string(), 2)).collect(),
            rows.iter().map(|r| r.iter().map(|b| *b as u32).collect()),
        )
    }

    /// `e_X`: every assignment over `X`. The empty domain gives `{⟨⟩}`.
    pub fn identity(frames: &BTreeMap<String, u32>) -> Self {
        let columns: Vec<(String, u32)> = frames.iter().map(|(v, f)| (v.clone(), *f)).collect();
        let mut rows = vec![vec![]];
        for (_, f) in &columns {
            rows = rows
                .into_iter()
                .flat_map(|r: Vec<u32>| {
                    (0..*f).map(move |x| {
                        let mut r = r.clone();
                        r.push(x);
                        r
                    })
                })
                .collect();
        }
        Self::new(columns, rows)
    }

    /// The empty relation over the given frames.
    pub fn empty(frames: &BTreeMap<String, u32>) -> Self {
        Self::new(frames.iter().map(|(v, f)| (v.clone(), *f)).collect(), vec![])
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn domain(&self) -> BTreeSet<String> {
        self.vars.iter().cloned().collect()
    }

    pub fn frames(&self) -> BTreeMap<String, u32> {
        self.vars.iter().cloned().zip(self.frames.iter().copied()).collect()
    }

    pub fn rows(&self) -> &BTreeSet<Vec<u32>> {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, var: &str) -> Option<usize> {
        self.vars.binary_search_by(|v| v.as_str().cmp(var)).ok()
    }

    /// Whether `row` (given over this structure's columns) is present.
    pub fn contains(&self, row: &[u32]) -> bool {
        self.rows.contains(row)
    }
}

/// `s ⊗ t`: the natural join.
pub fn combine(
    s: &RelationalStructure,
    t: &RelationalStructure,
) -> Result<RelationalStructure, RelationalError> {
    let mut frames = s.frames();
    for (v, f) in t.frames() {
        if let Some(g) = frames.insert(v.clone(), f) {
            if g != f {
                return Err(RelationalError::FrameMismatch { var: v, left: g, right: f });
            }
        }
    }
    let shared: Vec<(usize, usize)> = s
        .vars
        .iter()
        .enumerate()
        .filter_map(|(i, v)| t.column(v).map(|j| (i, j)))
        .collect();
    let t_only: Vec<usize> = (0..t.vars.len()).filter(|j| s.column(&t.vars[*j]).is_none()).collect();

    let mut index: FxHashMap<Vec<u32>, Vec<&Vec<u32>>> = FxHashMap::default();
    for r in &t.rows {
        index
            .entry(shared.iter().map(|(_, j)| r[*j]).collect())
            .or_default()
            .push(r);
    }
    let mut columns: Vec<(String, u32)> = s.vars.iter().cloned().zip(s.frames.iter().copied()).collect();
    columns.extend(t_only.iter().map(|j| (t.vars[*j].clone(), t.frames[*j])));
    let mut rows = vec![];
    for r in &s.rows {
        let key: Vec<u32> = shared.iter().map(|(i, _)| r[*i]).collect();
        if let Some(matches) = index.get(&key) {
            for m in matches {
                let mut row = r.clone();
                row.extend(t_only.iter().map(|j| m[*j]));
                rows.push(row);
            }
        }
    }
    Ok(RelationalStructure::new(columns, rows))
}

/// `⊗S`, with `⊗∅ = e_∅`.
pub fn combine_all<'a>(
    s: impl IntoIterator<Item = &'a RelationalStructure>,
) -> Result<RelationalStructure, RelationalError> {
    let mut acc = RelationalStructure::identity(&BTreeMap::new());
    for r in s {
        acc = combine(&acc, r)?;
    }
    Ok(acc)
}

/// `s↓X`: projection onto `dom(s) ∩ X`.
pub fn marginalize(s: &RelationalStructure, x: &BTreeSet<String>) -> RelationalStructure {
    let keep: Vec<usize> = (0..s.vars.len()).filter(|i| x.contains(&s.vars[*i])).collect();
    RelationalStructure {
        vars: keep.iter().map(|i| s.vars[*i].clone()).collect(),
        frames: keep.iter().map(|i| s.frames[*i]).collect(),
        rows: s
            .rows
            .iter()
            .map(|r| keep.iter().map(|i| r[*i]).collect())
            .collect(),
    }
}

/// `s^{-x} = s↓(dom(s) \ {x})`.
pub fn eliminate(s: &RelationalStructure, x: &str) -> RelationalStructure {
    let mut d = s.domain();
    d.remove(x);
    marginalize(s, &d)
}

/// `Fus_x(S)`: join the members mentioning `x`, eliminate `x`, keep the
/// rest. When no member mentions `x` the set is returned unchanged.
pub fn fuse(
    s: &[RelationalStructure],
    x: &str,
) -> Result<Vec<RelationalStructure>, RelationalError> {
    let (plus, mut minus): (Vec<_>, Vec<_>) =
        s.iter().cloned().partition(|r| r.column(x).is_some());
    if !plus.is_empty() {
        minus.push(eliminate(&combine_all(&plus)?, x));
    }
    Ok(minus)
}

/// `(⊗S)↓X` computed by fusing out `order` one variable at a time.
pub fn fusion_marginal(
    s: &[RelationalStructure],
    x: &BTreeSet<String>,
    order: &[String],
) -> Result<RelationalStructure, RelationalError> {
    let dom: BTreeSet<String> = s.iter().flat_map(|r| r.domain()).collect();
    let expected: BTreeSet<String> = dom.difference(x).cloned().collect();
    let got: BTreeSet<String> = order.iter().cloned().collect();
    if got != expected || got.len() != order.len() {
        return Err(RelationalError::BadOrder {
            expected,
            got: order.to_vec(),
        });
    }
    let mut cur = s.to_vec();
    for v in order {
        cur = fuse(&cur, v)?;
    }
    combine_all(&cur)
}

/// Greedy min-degree order over the interaction graph of `domains`,
/// eliminating every variable outside `keep`. Ties go to the
/// lexicographically smallest name. Eliminating a variable connects its
/// remaining neighbours.
pub fn elimination_order(domains: &[BTreeSet<String>], keep: &BTreeSet<String>) -> Vec<String> {
    let mut adj: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for d in domains {
        for v in d {
            let e = adj.entry(v.clone()).or_default();
            e.extend(d.iter().filter(|u| *u != v).cloned());
        }
    }
    let mut order = vec![];
    loop {
        let next = adj
            .iter()
            .filter(|(v, _)| !keep.contains(*v))
            .min_by_key(|(v, n)| (n.len(), (*v).clone()))
            .map(|(v, _)| v.clone());
        let Some(v) = next else { break };
        let nbrs = adj.remove(&v).unwrap();
        for a in &nbrs {
            let e = adj.get_mut(a).unwrap();
            e.remove(&v);
            e.extend(nbrs.iter().filter(|b| *b != a).cloned());
        }
        order.push(v);
    }
    order
}

/// Conditional independence `X ⊥ Y | Z` in `s`: whenever two rows agree on
/// `Z`, some row agrees with the first on `X ∪ Z` and with the second on
/// `Y ∪ Z`.
pub fn check_ci(
    s: &RelationalStructure,
    x: &BTreeSet<String>,
    y: &BTreeSet<String>,
    z: &BTreeSet<String>,
) -> bool {
    let cols = |set: &BTreeSet<String>| -> Vec<usize> {
        (0..s.vars.len()).filter(|i| set.contains(&s.vars[*i])).collect()
    };
    let xz: BTreeSet<String> = x.union(z).cloned().collect();
    let yz: BTreeSet<String> = y.union(z).cloned().collect();
    let (cz, cxz, cyz) = (cols(z), cols(&xz), cols(&yz));
    let proj = |r: &Vec<u32>, c: &[usize]| -> Vec<u32> { c.iter().map(|i| r[*i]).collect() };

    type Group = (FxHashSet<Vec<u32>>, FxHashSet<Vec<u32>>, FxHashSet<(Vec<u32>, Vec<u32>)>);
    let mut groups: FxHashMap<Vec<u32>, Group> = FxHashMap::default();
    for r in &s.rows {
        let g = groups.entry(proj(r, &cz)).or_default();
        let (a, b) = (proj(r, &cxz), proj(r, &cyz));
        g.0.insert(a.clone());
        g.1.insert(b.clone());
        g.2.insert((a, b));
    }
    groups
        .values()
        .all(|(a, b, pairs)| pairs.len() == a.len() * b.len())
}
