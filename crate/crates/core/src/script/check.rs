use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::{Pos, ScriptError};
use crate::logic::{Expr, Formula};

/// Index of a variable in the flattened universe of a [`CheckedSystem`].
pub type VarId = usize;

/// A resolved statement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Assign(VarId, Expr<VarId>),
    Rand(VarId),
}

impl Command {
    pub fn target(&self) -> VarId {
        match self {
            Command::Assign(v, _) | Command::Rand(v) => *v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckedAgent {
    pub name: String,
    /// One code block per time step, padded with empty (skip) blocks to the
    /// system horizon.
    pub actions: Vec<Vec<Command>>,
    pub observables: BTreeSet<VarId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckedSpec {
    pub name: String,
    pub time: usize,
    pub formula: Formula<VarId>,
}

/// A name-resolved system: flat boolean universe, per-agent action
/// sequences, environment code, initial condition and specifications.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckedSystem {
    pub vars: Vec<String>,
    pub agents: Vec<CheckedAgent>,
    pub env: Vec<Command>,
    pub init: Expr<VarId>,
    pub horizon: usize,
    pub specs: Vec<CheckedSpec>,
    /// Number of leading entries of `vars` that are globals; the rest are
    /// agent locals.
    pub num_globals: usize,
    index: HashMap<String, VarId>,
}

impl CheckedSystem {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn agent_index(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a.name == name)
    }

    /// Code executed during tick `t`: every agent's `t`-th action in
    /// declaration order, then the environment transitions.
    pub fn tick_code(&self, t: usize) -> impl Iterator<Item = &Command> {
        self.agents
            .iter()
            .flat_map(move |a| a.actions.get(t).into_iter().flatten())
            .chain(self.env.iter())
    }

    pub fn spec_by_name(&self, name: &str) -> Option<&CheckedSpec> {
        self.specs.iter().find(|s| s.name == name)
    }

    /// Look a spec up by full name, by bracketed label (`Any` or `[Any]`),
    /// or by name prefix.
    pub fn find_spec(&self, label: &str) -> Option<&CheckedSpec> {
        let bare = label.trim_start_matches('[').trim_end_matches(']');
        let bracket = format!("[{bare}]");
        self.spec_by_name(label)
            .or_else(|| self.specs.iter().find(|s| s.name.starts_with(&bracket)))
            .or_else(|| self.specs.iter().find(|s| s.name.starts_with(label)))
    }

    pub fn format_formula(&self, f: &Formula<VarId>) -> String {
        let g = f.try_map::<&str, &str, ()>(
            &mut |v| Ok(self.vars[*v].as_str()),
            &mut |a| Ok(self.agents[*a].name.as_str()),
        );
        g.map(|g| g.to_string()).unwrap_or_default()
    }
}

/// Variables occurring in a spec formula, each paired with the spec's
/// evaluation time.
pub fn formula_vars(spec: &CheckedSpec) -> BTreeSet<(VarId, usize)> {
    spec.formula
        .atoms()
        .into_iter()
        .map(|v| (v, spec.time))
        .collect()
}

#[derive(Clone, Debug)]
enum Binding {
    Scalar(VarId),
    Array(Vec<VarId>),
}

struct Ctx {
    vars: Vec<String>,
    index: HashMap<String, VarId>,
    aliases: HashMap<String, u32>,
}

impl Ctx {
    fn fresh(&mut self, name: String) -> VarId {
        let id = self.vars.len();
        self.index.insert(name.clone(), id);
        self.vars.push(name);
        id
    }

    fn declare(&mut self, prefix: &str, d: &VarDecl) -> Result<Binding, ScriptError> {
        let base = format!("{prefix}{}", d.name);
        Ok(match &d.shape {
            Shape::Scalar => Binding::Scalar(self.fresh(base)),
            Shape::Array(size) => {
                let n = self.size(size, d.at.0)?;
                Binding::Array((0..n).map(|i| self.fresh(format!("{base}[{i}]"))).collect())
            }
        })
    }

    fn size(&self, s: &Size, pos: Pos) -> Result<u32, ScriptError> {
        match s {
            Size::Lit(n) => Ok(*n),
            Size::Alias(a) => self
                .aliases
                .get(a)
                .copied()
                .ok_or_else(|| ScriptError::UnboundVariable {
                    pos,
                    name: a.clone(),
                }),
            Size::Unsized => Err(ScriptError::ShapeMismatch {
                pos,
                message: "unsized array outside a parameter list".into(),
            }),
        }
    }
}

fn resolve_scalar(
    scope: &HashMap<String, Binding>,
    r: &VarRef,
) -> Result<VarId, ScriptError> {
    let pos = r.at.0;
    let b = scope.get(&r.name).ok_or_else(|| ScriptError::UnboundVariable {
        pos,
        name: r.to_string(),
    })?;
    match (b, r.index) {
        (Binding::Scalar(v), None) => Ok(*v),
        (Binding::Array(vs), Some(i)) => vs.get(i as usize).copied().ok_or(
            ScriptError::IndexOutOfBounds {
                pos,
                name: r.name.clone(),
                index: i,
                size: vs.len() as u32,
            },
        ),
        (Binding::Scalar(_), Some(_)) => Err(ScriptError::ShapeMismatch {
            pos,
            message: format!("`{}` is not an array", r.name),
        }),
        (Binding::Array(_), None) => Err(ScriptError::ShapeMismatch {
            pos,
            message: format!("array `{}` used without an index", r.name),
        }),
    }
}

fn resolve_stmts(
    scope: &HashMap<String, Binding>,
    stmts: &[Stmt],
) -> Result<Vec<Command>, ScriptError> {
    stmts
        .iter()
        .map(|s| {
            Ok(match s {
                Stmt::Assign(v, e) => Command::Assign(
                    resolve_plain(scope, v)?,
                    e.try_map(&mut |r| resolve_plain(scope, r))?,
                ),
                Stmt::Rand(v) => Command::Rand(resolve_plain(scope, v)?),
            })
        })
        .collect()
}

/// Resolve a reference that must not carry an agent qualifier.
fn resolve_plain(scope: &HashMap<String, Binding>, r: &VarRef) -> Result<VarId, ScriptError> {
    if r.agent.is_some() {
        return Err(ScriptError::UnboundVariable {
            pos: r.at.0,
            name: r.to_string(),
        });
    }
    resolve_scalar(scope, r)
}

fn check_unique<'a>(
    names: impl IntoIterator<Item = (&'a str, Pos)>,
) -> Result<(), ScriptError> {
    let mut seen = HashSet::new();
    for (n, pos) in names {
        if !seen.insert(n) {
            return Err(ScriptError::DuplicateName {
                pos,
                name: n.to_string(),
            });
        }
    }
    Ok(())
}

/// Resolve names, bind protocol parameters, flatten locals to
/// `Agent.name`, and pad action sequences to the common horizon.
pub fn check_script(s: &Script) -> Result<CheckedSystem, ScriptError> {
    check_unique(
        s.type_aliases
            .iter()
            .map(|t| (t.name.as_str(), t.at.0))
            .chain(s.globals.iter().map(|g| (g.name.as_str(), g.at.0))),
    )?;
    check_unique(s.agents.iter().map(|a| (a.name.as_str(), a.at.0)))?;
    check_unique(s.protocols.iter().map(|p| (p.name.as_str(), p.at.0)))?;

    let mut ctx = Ctx {
        vars: vec![],
        index: HashMap::new(),
        aliases: s
            .type_aliases
            .iter()
            .map(|t| (t.name.clone(), t.size()))
            .collect(),
    };
    let mut globals: HashMap<String, Binding> = HashMap::new();
    for g in &s.globals {
        if g.observable {
            return Err(ScriptError::Syntax {
                pos: g.at.0,
                message: "`observable` is only meaningful for protocol parameters and locals"
                    .into(),
            });
        }
        let b = ctx.declare("", g)?;
        globals.insert(g.name.clone(), b);
    }
    let num_globals = ctx.vars.len();

    let protocols: HashMap<&str, &ProtocolDecl> =
        s.protocols.iter().map(|p| (p.name.as_str(), p)).collect();

    let mut agents = vec![];
    let mut agent_locals: Vec<HashMap<String, Binding>> = vec![];
    for a in &s.agents {
        let pos = a.at.0;
        let p = protocols
            .get(a.protocol.as_str())
            .ok_or_else(|| ScriptError::UnknownProtocol {
                pos,
                name: a.protocol.clone(),
            })?;
        check_unique(
            p.params
                .iter()
                .chain(p.locals.iter())
                .map(|d| (d.name.as_str(), d.at.0)),
        )?;
        if p.params.len() != a.args.len() {
            return Err(ScriptError::ArityMismatch {
                pos,
                message: format!(
                    "protocol \"{}\" takes {} arguments but agent `{}` supplies {}",
                    p.name,
                    p.params.len(),
                    a.name,
                    a.args.len()
                ),
            });
        }
        let mut scope: HashMap<String, Binding> = HashMap::new();
        let mut observables = BTreeSet::new();
        for (formal, actual) in p.params.iter().zip(&a.args) {
            let apos = actual.at.0;
            if actual.agent.is_some() {
                return Err(ScriptError::UnboundVariable {
                    pos: apos,
                    name: actual.to_string(),
                });
            }
            let gb = globals
                .get(&actual.name)
                .ok_or_else(|| ScriptError::UnboundVariable {
                    pos: apos,
                    name: actual.to_string(),
                })?;
            let bound = match (&formal.shape, gb, actual.index) {
                (Shape::Scalar, _, _) => Binding::Scalar(resolve_scalar(&globals, actual)?),
                (Shape::Array(size), Binding::Array(vs), None) => {
                    if let Size::Unsized = size {
                    } else {
                        let n = ctx.size(size, formal.at.0)?;
                        if n as usize != vs.len() {
                            return Err(ScriptError::ArityMismatch {
                                pos: apos,
                                message: format!(
                                    "parameter `{}` expects an array of size {n}, `{}` has size {}",
                                    formal.name,
                                    actual.name,
                                    vs.len()
                                ),
                            });
                        }
                    }
                    Binding::Array(vs.clone())
                }
                _ => {
                    return Err(ScriptError::ArityMismatch {
                        pos: apos,
                        message: format!(
                            "parameter `{}` is an array but `{actual}` is not",
                            formal.name
                        ),
                    })
                }
            };
            if formal.observable {
                match &bound {
                    Binding::Scalar(v) => {
                        observables.insert(*v);
                    }
                    Binding::Array(vs) => observables.extend(vs.iter().copied()),
                }
            }
            scope.insert(formal.name.clone(), bound);
        }
        let mut locals = HashMap::new();
        for l in &p.locals {
            let b = ctx.declare(&format!("{}.", a.name), l)?;
            if l.observable {
                match &b {
                    Binding::Scalar(v) => {
                        observables.insert(*v);
                    }
                    Binding::Array(vs) => observables.extend(vs.iter().copied()),
                }
            }
            locals.insert(l.name.clone(), b.clone());
            scope.insert(l.name.clone(), b);
        }
        let actions = p
            .body
            .iter()
            .map(|act| match act {
                Action::Skip => Ok(vec![]),
                Action::Atomic(stmts) => resolve_stmts(&scope, stmts),
            })
            .collect::<Result<Vec<_>, _>>()?;
        agents.push(CheckedAgent {
            name: a.name.clone(),
            actions,
            observables,
        });
        agent_locals.push(locals);
    }

    let horizon = agents.iter().map(|a| a.actions.len()).max().unwrap_or(0);
    for a in &mut agents {
        a.actions.resize(horizon, vec![]);
    }

    let env = match &s.env_transitions {
        Some(stmts) => resolve_stmts(&globals, stmts)?,
        None => vec![],
    };

    let init = match &s.init_cond {
        Some(e) => e.try_map(&mut |r| {
            if let Some(agent) = &r.agent {
                if s.agents.iter().any(|a| &a.name == agent) {
                    return Err(ScriptError::LocalInInit {
                        pos: r.at.0,
                        name: r.to_string(),
                    });
                }
                return Err(ScriptError::UnboundVariable {
                    pos: r.at.0,
                    name: r.to_string(),
                });
            }
            resolve_scalar(&globals, r)
        })?,
        None => Expr::Const(true),
    };

    let agent_names: HashMap<&str, usize> = s
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| (a.name.as_str(), i))
        .collect();
    let mut specs = vec![];
    for (k, sp) in s.specs.iter().enumerate() {
        let formula = sp.formula.try_map(
            &mut |r: &VarRef| match &r.agent {
                None => resolve_scalar(&globals, r),
                Some(agent) => {
                    let i = *agent_names.get(agent.as_str()).ok_or_else(|| {
                        ScriptError::UnknownAgent {
                            pos: r.at.0,
                            name: agent.clone(),
                        }
                    })?;
                    resolve_scalar(&agent_locals[i], r)
                }
            },
            &mut |g: &String| {
                agent_names
                    .get(g.as_str())
                    .copied()
                    .ok_or_else(|| ScriptError::UnknownAgent {
                        pos: sp.at.0,
                        name: g.clone(),
                    })
            },
        )?;
        let time = sp.time.unwrap_or(0);
        if time as usize > horizon {
            return Err(ScriptError::TimeBeyondHorizon {
                pos: sp.at.0,
                time,
                horizon,
            });
        }
        let name = if s.specs.iter().filter(|o| o.display_name() == sp.display_name()).count() > 1
        {
            format!("{}#{k}", sp.display_name())
        } else {
            sp.display_name().to_string()
        };
        specs.push(CheckedSpec {
            name,
            time: time as usize,
            formula,
        });
    }

    Ok(CheckedSystem {
        vars: ctx.vars,
        agents,
        env,
        init,
        horizon,
        specs,
        num_globals,
        index: ctx.index,
    })
}
