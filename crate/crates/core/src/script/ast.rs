//! Abstract syntax of protocol scripts, plus a pretty-printer whose output
//! parses back to the same tree.

use std::fmt;

use super::Pos;
use crate::logic::{Expr, Formula};

/// Source location attached to AST nodes for diagnostics.
///
/// Locations never take part in structural comparison: two trees that
/// differ only in where they were written compare equal.
#[derive(Clone, Copy, Debug, Default)]
pub struct Loc(pub Pos);

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Loc {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Script {
    pub type_aliases: Vec<TypeAlias>,
    pub globals: Vec<VarDecl>,
    pub init_cond: Option<Expr<VarRef>>,
    pub agents: Vec<AgentDecl>,
    pub env_transitions: Option<Vec<Stmt>>,
    pub specs: Vec<SpecDecl>,
    pub protocols: Vec<ProtocolDecl>,
}

/// `type Name = {lo..hi}`: an integer range usable as an array size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeAlias {
    pub name: String,
    pub lo: u32,
    pub hi: u32,
    pub at: Loc,
}

impl TypeAlias {
    pub fn size(&self) -> u32 {
        self.hi - self.lo + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Size {
    Lit(u32),
    Alias(String),
    /// `Bool[]`; only legal for protocol parameters.
    Unsized,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Array(Size),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub shape: Shape,
    pub observable: bool,
    pub at: Loc,
}

/// A variable reference as written: `v`, `a[3]`, `Agent.v` or `Agent.a[3]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarRef {
    pub agent: Option<String>,
    pub name: String,
    pub index: Option<u32>,
    pub at: Loc,
}

impl VarRef {
    pub fn simple(name: &str) -> Self {
        VarRef {
            agent: None,
            name: name.to_string(),
            index: None,
            at: Loc::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign(VarRef, Expr<VarRef>),
    Rand(VarRef),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Skip,
    Atomic(Vec<Stmt>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentDecl {
    pub name: String,
    pub protocol: String,
    pub args: Vec<VarRef>,
    pub at: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecDecl {
    /// The keyword as written, e.g. `spec_spr` or `spec_spr_ci`.
    pub keyword: String,
    pub label: Option<String>,
    pub time: Option<u32>,
    pub formula: Formula<VarRef, String>,
    pub at: Loc,
}

impl SpecDecl {
    /// Name used to select the spec: the quoted label when present,
    /// otherwise the keyword.
    pub fn display_name(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.keyword)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolDecl {
    pub name: String,
    pub params: Vec<VarDecl>,
    pub locals: Vec<VarDecl>,
    pub body: Vec<Action>,
    pub at: Loc,
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(a) = &self.agent {
            write!(f, "{a}.")?;
        }
        f.write_str(&self.name)?;
        if let Some(i) = self.index {
            write!(f, "[{i}]")?;
        }
        Ok(())
    }
}

impl fmt::Display for VarDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : ", self.name)?;
        if self.observable {
            f.write_str("observable ")?;
        }
        f.write_str("Bool")?;
        match &self.shape {
            Shape::Scalar => Ok(()),
            Shape::Array(Size::Lit(n)) => write!(f, "[{n}]"),
            Shape::Array(Size::Alias(a)) => write!(f, "[{a}]"),
            Shape::Array(Size::Unsized) => f.write_str("[]"),
        }
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::Assign(v, e) => write!(f, "{v} := {e}"),
            Stmt::Rand(v) => write!(f, "rand({v})"),
        }
    }
}

fn write_stmts(f: &mut fmt::Formatter<'_>, stmts: &[Stmt], sep: &str) -> fmt::Result {
    for (i, s) in stmts.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{s}")?;
    }
    Ok(())
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Skip => f.write_str("skip"),
            Action::Atomic(stmts) => {
                f.write_str("<| ")?;
                write_stmts(f, stmts, "; ")?;
                f.write_str(" |>")
            }
        }
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.type_aliases {
            writeln!(f, "type {} = {{{}..{}}}", t.name, t.lo, t.hi)?;
        }
        for g in &self.globals {
            writeln!(f, "{g}")?;
        }
        if let Some(init) = &self.init_cond {
            writeln!(f, "\ninit_cond = {init}")?;
        }
        if !self.agents.is_empty() {
            writeln!(f)?;
        }
        for a in &self.agents {
            write!(f, "agent {} \"{}\" (", a.name, a.protocol)?;
            for (i, arg) in a.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{arg}")?;
            }
            writeln!(f, ")")?;
        }
        if let Some(env) = &self.env_transitions {
            f.write_str("\ntransitions\nbegin\n  ")?;
            write_stmts(f, env, ";\n  ")?;
            f.write_str("\nend\n")?;
        }
        for s in &self.specs {
            write!(f, "\n{} = ", s.keyword)?;
            if let Some(l) = &s.label {
                write!(f, "\"{l}\" ")?;
            }
            if let Some(t) = s.time {
                write!(f, "X {t} ")?;
            }
            writeln!(f, "{}", s.formula)?;
        }
        for p in &self.protocols {
            write!(f, "\nprotocol \"{}\" (", p.name)?;
            for (i, d) in p.params.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{d}")?;
            }
            writeln!(f, ")")?;
            for l in &p.locals {
                writeln!(f, "{l}")?;
            }
            f.write_str("begin\n")?;
            for (i, a) in p.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(";\n")?;
                }
                write!(f, "  {a}")?;
            }
            f.write_str("\nend\n")?;
        }
        Ok(())
    }
}
