//! Boolean expressions and epistemic formulas, generic over the atom type.
//!
//! The same trees are used at every stage of the pipeline: the parser
//! produces them over source-level variable references, the checker
//! resolves them to flattened variable ids, and the unfolder rewrites them
//! over DAG node ids.

use std::collections::BTreeSet;
use std::fmt;

/// Binary boolean connectives, listed from tightest to loosest binding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Xor,
    And,
    Or,
    Implies,
    Iff,
}

impl BinOp {
    pub fn apply(self, a: bool, b: bool) -> bool {
        match self {
            BinOp::Xor => a ^ b,
            BinOp::And => a && b,
            BinOp::Or => a || b,
            BinOp::Implies => !a || b,
            BinOp::Iff => a == b,
        }
    }

    /// Concrete syntax of the operator.
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Xor => "xor",
            BinOp::And => "/\\",
            BinOp::Or => "\\/",
            BinOp::Implies => "=>",
            BinOp::Iff => "<=>",
        }
    }

    /// Larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Xor => 5,
            BinOp::And => 4,
            BinOp::Or => 3,
            BinOp::Implies => 2,
            BinOp::Iff => 1,
        }
    }

    pub fn right_assoc(self) -> bool {
        matches!(self, BinOp::Implies)
    }
}

/// A program expression over atoms of type `A`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr<A> {
    Const(bool),
    Var(A),
    Not(Box<Expr<A>>),
    Bin(BinOp, Box<Expr<A>>, Box<Expr<A>>),
}

impl<A> Expr<A> {
    pub fn not(e: Expr<A>) -> Self {
        Expr::Not(Box::new(e))
    }

    pub fn bin(op: BinOp, a: Expr<A>, b: Expr<A>) -> Self {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn eval(&self, val: &mut impl FnMut(&A) -> bool) -> bool {
        match self {
            Expr::Const(b) => *b,
            Expr::Var(a) => val(a),
            Expr::Not(e) => !e.eval(val),
            Expr::Bin(op, a, b) => {
                let x = a.eval(val);
                let y = b.eval(val);
                op.apply(x, y)
            }
        }
    }

    pub fn try_map<B, E>(&self, f: &mut impl FnMut(&A) -> Result<B, E>) -> Result<Expr<B>, E> {
        Ok(match self {
            Expr::Const(b) => Expr::Const(*b),
            Expr::Var(a) => Expr::Var(f(a)?),
            Expr::Not(e) => Expr::not(e.try_map(f)?),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.try_map(f)?, b.try_map(f)?),
        })
    }

    pub fn map<B>(&self, f: &mut impl FnMut(&A) -> B) -> Expr<B> {
        self.try_map::<B, std::convert::Infallible>(&mut |a| Ok(f(a)))
            .unwrap_or_else(|e| match e {})
    }

    pub fn for_each_atom<'a>(&'a self, f: &mut impl FnMut(&'a A)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(a) => f(a),
            Expr::Not(e) => e.for_each_atom(f),
            Expr::Bin(_, a, b) => {
                a.for_each_atom(f);
                b.for_each_atom(f);
            }
        }
    }

    pub fn atoms(&self) -> BTreeSet<A>
    where
        A: Ord + Clone,
    {
        let mut out = BTreeSet::new();
        self.for_each_atom(&mut |a| {
            out.insert(a.clone());
        });
        out
    }

    /// Bare variable, if the expression is exactly one.
    pub fn as_var(&self) -> Option<&A> {
        match self {
            Expr::Var(a) => Some(a),
            _ => None,
        }
    }
}

/// An epistemic formula over atoms `A`; knowledge operators name agents of
/// type `G` (an index once names are resolved).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula<A, G = usize> {
    Const(bool),
    Atom(A),
    Not(Box<Formula<A, G>>),
    Bin(BinOp, Box<Formula<A, G>>, Box<Formula<A, G>>),
    Knows(G, Box<Formula<A, G>>),
}

impl<A, G> Formula<A, G> {
    pub fn not(f: Formula<A, G>) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn bin(op: BinOp, a: Formula<A, G>, b: Formula<A, G>) -> Self {
        Formula::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn and(a: Formula<A, G>, b: Formula<A, G>) -> Self {
        Self::bin(BinOp::And, a, b)
    }

    pub fn knows(agent: G, f: Formula<A, G>) -> Self {
        Formula::Knows(agent, Box::new(f))
    }

    pub fn try_map<B, H, E>(
        &self,
        atom: &mut impl FnMut(&A) -> Result<B, E>,
        agent: &mut impl FnMut(&G) -> Result<H, E>,
    ) -> Result<Formula<B, H>, E> {
        Ok(match self {
            Formula::Const(b) => Formula::Const(*b),
            Formula::Atom(a) => Formula::Atom(atom(a)?),
            Formula::Not(f) => Formula::not(f.try_map(atom, agent)?),
            Formula::Bin(op, a, b) => {
                Formula::bin(*op, a.try_map(atom, agent)?, b.try_map(atom, agent)?)
            }
            Formula::Knows(g, f) => Formula::knows(agent(g)?, f.try_map(atom, agent)?),
        })
    }

    pub fn map_atoms<B>(&self, f: &mut impl FnMut(&A) -> B) -> Formula<B, G>
    where
        G: Clone,
    {
        self.try_map::<B, G, std::convert::Infallible>(&mut |a| Ok(f(a)), &mut |g| Ok(g.clone()))
            .unwrap_or_else(|e| match e {})
    }

    pub fn for_each_atom<'a>(&'a self, f: &mut impl FnMut(&'a A)) {
        match self {
            Formula::Const(_) => {}
            Formula::Atom(a) => f(a),
            Formula::Not(g) | Formula::Knows(_, g) => g.for_each_atom(f),
            Formula::Bin(_, a, b) => {
                a.for_each_atom(f);
                b.for_each_atom(f);
            }
        }
    }

    pub fn atoms(&self) -> BTreeSet<A>
    where
        A: Ord + Clone,
    {
        let mut out = BTreeSet::new();
        self.for_each_atom(&mut |a| {
            out.insert(a.clone());
        });
        out
    }

    /// Agents whose knowledge operator occurs somewhere in the formula.
    pub fn agents(&self) -> BTreeSet<G>
    where
        G: Ord + Clone,
    {
        fn walk<A, G: Ord + Clone>(f: &Formula<A, G>, out: &mut BTreeSet<G>) {
            match f {
                Formula::Const(_) | Formula::Atom(_) => {}
                Formula::Not(g) => walk(g, out),
                Formula::Bin(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Formula::Knows(ag, g) => {
                    out.insert(ag.clone());
                    walk(g, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        walk(self, &mut out);
        out
    }

    /// Nesting depth of knowledge operators.
    pub fn knows_depth(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Atom(_) => 0,
            Formula::Not(g) => g.knows_depth(),
            Formula::Bin(_, a, b) => a.knows_depth().max(b.knows_depth()),
            Formula::Knows(_, g) => 1 + g.knows_depth(),
        }
    }

    /// Evaluate a formula without knowledge operators.
    ///
    /// Returns `None` when a `Knows` node is encountered.
    pub fn eval_propositional(&self, val: &mut impl FnMut(&A) -> bool) -> Option<bool> {
        Some(match self {
            Formula::Const(b) => *b,
            Formula::Atom(a) => val(a),
            Formula::Not(f) => !f.eval_propositional(val)?,
            Formula::Bin(op, a, b) => {
                let x = a.eval_propositional(val)?;
                let y = b.eval_propositional(val)?;
                op.apply(x, y)
            }
            Formula::Knows(..) => return None,
        })
    }
}

impl<A: Clone, G> From<&Expr<A>> for Formula<A, G> {
    fn from(e: &Expr<A>) -> Self {
        match e {
            Expr::Const(b) => Formula::Const(*b),
            Expr::Var(a) => Formula::Atom(a.clone()),
            Expr::Not(x) => Formula::not(x.as_ref().into()),
            Expr::Bin(op, a, b) => Formula::bin(*op, a.as_ref().into(), b.as_ref().into()),
        }
    }
}

fn write_operand<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    child: &T,
    child_prec: u8,
    need: u8,
) -> fmt::Result {
    if child_prec < need {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

const ATOM_PREC: u8 = 10;

fn expr_prec<A>(e: &Expr<A>) -> u8 {
    match e {
        Expr::Bin(op, ..) => op.precedence(),
        _ => ATOM_PREC,
    }
}

fn formula_prec<A, G>(e: &Formula<A, G>) -> u8 {
    match e {
        Formula::Bin(op, ..) => op.precedence(),
        _ => ATOM_PREC,
    }
}

fn sides(op: BinOp) -> (u8, u8) {
    let p = op.precedence();
    if op.right_assoc() {
        (p + 1, p)
    } else {
        (p, p + 1)
    }
}

impl<A: fmt::Display> fmt::Display for Expr<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(true) => write!(f, "True"),
            Expr::Const(false) => write!(f, "False"),
            Expr::Var(a) => write!(f, "{a}"),
            Expr::Not(e) => {
                write!(f, "neg ")?;
                write_operand(f, e.as_ref(), expr_prec(e), ATOM_PREC)
            }
            Expr::Bin(op, a, b) => {
                let (l, r) = sides(*op);
                write_operand(f, a.as_ref(), expr_prec(a), l)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, b.as_ref(), expr_prec(b), r)
            }
        }
    }
}

impl<A: fmt::Display, G: fmt::Display> fmt::Display for Formula<A, G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Const(true) => write!(f, "True"),
            Formula::Const(false) => write!(f, "False"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(e) => {
                write!(f, "neg ")?;
                write_operand(f, e.as_ref(), formula_prec(e), ATOM_PREC)
            }
            Formula::Knows(g, e) => {
                write!(f, "Knows {g} ")?;
                write_operand(f, e.as_ref(), formula_prec(e), ATOM_PREC)
            }
            Formula::Bin(op, a, b) => {
                let (l, r) = sides(*op);
                write_operand(f, a.as_ref(), formula_prec(a), l)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, b.as_ref(), formula_prec(b), r)
            }
        }
    }
}
