use super::ast::*;
use super::lexer::{tokenize, Tok};
use super::{Pos, ScriptError};
use crate::logic::{BinOp, Expr, Formula};

const RESERVED: &[&str] = &[
    "neg",
    "xor",
    "True",
    "False",
    "Knows",
    "X",
    "begin",
    "end",
    "skip",
    "rand",
    "agent",
    "protocol",
    "observable",
    "transitions",
    "init_cond",
    "type",
    "Bool",
];

fn is_reserved(s: &str) -> bool {
    RESERVED.contains(&s) || s.starts_with("spec_spr")
}

/// Parse a complete script.
pub fn parse_script(text: &str) -> Result<Script, ScriptError> {
    let toks = tokenize(text)?;
    Parser { toks, pos: 0 }.script()
}

/// Parse a standalone formula (with optional `X k` prefix), e.g. for
/// command-line queries.
pub fn parse_formula(text: &str) -> Result<(Option<u32>, Formula<VarRef, String>), ScriptError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    let time = p.time_prefix()?;
    let f = p.formula()?;
    p.expect(Tok::Eof, "end of formula")?;
    Ok((time, f))
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn here(&self) -> Pos {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, expected: &str) -> Result<T, ScriptError> {
        Err(ScriptError::Syntax {
            pos: self.here(),
            message: format!("expected {expected}, found {}", self.peek()),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ScriptError> {
        if *self.peek() == t {
            self.next();
            Ok(())
        } else {
            self.err(what)
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ScriptError> {
        if self.is_kw(kw) {
            self.next();
            Ok(())
        } else {
            self.err(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ScriptError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.next();
                Ok(s)
            }
            _ => self.err(what),
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, ScriptError> {
        match *self.peek() {
            Tok::Num(n) => {
                self.next();
                Ok(n)
            }
            _ => self.err(what),
        }
    }

    fn string(&mut self, what: &str) -> Result<String, ScriptError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.next();
                Ok(s)
            }
            _ => self.err(what),
        }
    }

    fn script(&mut self) -> Result<Script, ScriptError> {
        let mut s = Script {
            type_aliases: vec![],
            globals: vec![],
            init_cond: None,
            agents: vec![],
            env_transitions: None,
            specs: vec![],
            protocols: vec![],
        };
        loop {
            let at = Loc(self.here());
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(kw) if kw == "type" => {
                    self.next();
                    let name = self.ident("type name")?;
                    self.expect(Tok::Eq, "`=`")?;
                    self.expect(Tok::LBrace, "`{`")?;
                    let lo = self.number("range lower bound")?;
                    self.expect(Tok::DotDot, "`..`")?;
                    let hi = self.number("range upper bound")?;
                    self.expect(Tok::RBrace, "`}`")?;
                    if hi < lo {
                        return Err(ScriptError::Syntax {
                            pos: at.0,
                            message: format!("empty range {{{lo}..{hi}}}"),
                        });
                    }
                    s.type_aliases.push(TypeAlias { name, lo, hi, at });
                }
                Tok::Ident(kw) if kw == "init_cond" => {
                    self.next();
                    self.expect(Tok::Eq, "`=`")?;
                    if s.init_cond.is_some() {
                        return Err(ScriptError::Syntax {
                            pos: at.0,
                            message: "duplicate init_cond".into(),
                        });
                    }
                    s.init_cond = Some(self.expr()?);
                }
                Tok::Ident(kw) if kw == "agent" => {
                    self.next();
                    let name = self.ident("agent name")?;
                    let protocol = self.string("quoted protocol name")?;
                    self.expect(Tok::LParen, "`(`")?;
                    let mut args = vec![];
                    if *self.peek() != Tok::RParen {
                        loop {
                            args.push(self.var_ref()?);
                            if *self.peek() == Tok::Comma {
                                self.next();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen, "`,` or `)`")?;
                    s.agents.push(AgentDecl {
                        name,
                        protocol,
                        args,
                        at,
                    });
                }
                Tok::Ident(kw) if kw == "transitions" => {
                    self.next();
                    self.expect_kw("begin")?;
                    let stmts = self.stmts(|t| matches!(t, Tok::Ident(s) if s == "end"))?;
                    self.expect_kw("end")?;
                    s.env_transitions
                        .get_or_insert_with(Vec::new)
                        .extend(stmts);
                }
                Tok::Ident(kw) if kw.starts_with("spec_spr") => {
                    self.next();
                    self.expect(Tok::Eq, "`=`")?;
                    let label = match self.peek() {
                        Tok::Str(_) => Some(self.string("label")?),
                        _ => None,
                    };
                    let time = self.time_prefix()?;
                    let formula = self.formula()?;
                    s.specs.push(SpecDecl {
                        keyword: kw,
                        label,
                        time,
                        formula,
                        at,
                    });
                }
                Tok::Ident(kw) if kw == "protocol" => {
                    self.next();
                    s.protocols.push(self.protocol(at)?);
                }
                Tok::Ident(_) if *self.peek_at(1) == Tok::Colon => {
                    s.globals.push(self.decl(false)?);
                }
                _ => return self.err("a declaration, `init_cond`, `agent`, `transitions`, `spec_spr` or `protocol`"),
            }
        }
        Ok(s)
    }

    fn time_prefix(&mut self) -> Result<Option<u32>, ScriptError> {
        if self.is_kw("X") {
            self.next();
            let k = self.number("time after `X`")?;
            if self.is_kw("X") {
                return Err(ScriptError::Syntax {
                    pos: self.here(),
                    message: "nested temporal operators are not supported".into(),
                });
            }
            Ok(Some(k))
        } else {
            Ok(None)
        }
    }

    fn protocol(&mut self, at: Loc) -> Result<ProtocolDecl, ScriptError> {
        let name = self.string("quoted protocol name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params = vec![];
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.decl(true)?);
                if *self.peek() == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        let mut locals = vec![];
        while !self.is_kw("begin") {
            if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Colon {
                locals.push(self.decl(false)?);
            } else {
                return self.err("local declaration or `begin`");
            }
        }
        self.expect_kw("begin")?;
        let mut body = vec![];
        if !self.is_kw("end") {
            loop {
                if self.is_kw("skip") {
                    self.next();
                    body.push(Action::Skip);
                } else if *self.peek() == Tok::ActOpen {
                    self.next();
                    let stmts = self.stmts(|t| *t == Tok::ActClose)?;
                    self.expect(Tok::ActClose, "`|>`")?;
                    body.push(Action::Atomic(stmts));
                } else {
                    return self.err("`<|` or `skip`");
                }
                if *self.peek() == Tok::Semi {
                    self.next();
                    if self.is_kw("end") {
                        break;
                    }
                } else {
                    break;
                }
            }
        }
        self.expect_kw("end")?;
        Ok(ProtocolDecl {
            name,
            params,
            locals,
            body,
            at,
        })
    }

    /// `stmt (; stmt)*` with an optional trailing `;`, stopping before a
    /// token accepted by `stop`.
    fn stmts(&mut self, stop: impl Fn(&Tok) -> bool) -> Result<Vec<Stmt>, ScriptError> {
        let mut out = vec![];
        while !stop(self.peek()) {
            out.push(self.stmt()?);
            if *self.peek() == Tok::Semi {
                self.next();
            } else {
                break;
            }
        }
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, ScriptError> {
        if self.is_kw("rand") {
            self.next();
            self.expect(Tok::LParen, "`(`")?;
            let v = self.var_ref()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Stmt::Rand(v));
        }
        let v = self.var_ref()?;
        self.expect(Tok::Assign, "`:=`")?;
        let e = self.expr()?;
        Ok(Stmt::Assign(v, e))
    }

    fn decl(&mut self, param: bool) -> Result<VarDecl, ScriptError> {
        let at = Loc(self.here());
        let name = self.ident("variable name")?;
        self.expect(Tok::Colon, "`:`")?;
        let observable = if self.is_kw("observable") {
            self.next();
            true
        } else {
            false
        };
        self.expect_kw("Bool")?;
        let shape = if *self.peek() == Tok::LBracket {
            self.next();
            let size = match self.peek().clone() {
                Tok::Num(0) => {
                    return Err(ScriptError::Syntax {
                        pos: self.here(),
                        message: "array size must be at least 1".into(),
                    })
                }
                Tok::Num(n) => {
                    self.next();
                    Size::Lit(n)
                }
                Tok::Ident(_) => Size::Alias(self.ident("range type name")?),
                Tok::RBracket if param => Size::Unsized,
                Tok::RBracket => {
                    return Err(ScriptError::Syntax {
                        pos: self.here(),
                        message: "unsized arrays are only allowed for protocol parameters".into(),
                    })
                }
                _ => return self.err("array size"),
            };
            self.expect(Tok::RBracket, "`]`")?;
            Shape::Array(size)
        } else {
            Shape::Scalar
        };
        Ok(VarDecl {
            name,
            shape,
            observable,
            at,
        })
    }

    fn var_ref(&mut self) -> Result<VarRef, ScriptError> {
        let at = Loc(self.here());
        let first = self.ident("variable")?;
        let (agent, name) = if *self.peek() == Tok::Dot {
            self.next();
            (Some(first), self.ident("variable name after `.`")?)
        } else {
            (None, first)
        };
        let index = if *self.peek() == Tok::LBracket {
            self.next();
            let i = self.number("constant array index")?;
            self.expect(Tok::RBracket, "`]`")?;
            Some(i)
        } else {
            None
        };
        Ok(VarRef {
            agent,
            name,
            index,
            at,
        })
    }

    fn expr(&mut self) -> Result<Expr<VarRef>, ScriptError> {
        let at = self.here();
        let f = self.formula()?;
        to_expr(&f).ok_or(ScriptError::Syntax {
            pos: at,
            message: "knowledge operators are only allowed in specifications".into(),
        })
    }

    fn formula(&mut self) -> Result<Formula<VarRef, String>, ScriptError> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Iff => Some(BinOp::Iff),
            Tok::Implies => Some(BinOp::Implies),
            Tok::Or => Some(BinOp::Or),
            Tok::And => Some(BinOp::And),
            Tok::Ident(s) if s == "xor" => Some(BinOp::Xor),
            _ => None,
        }
    }

    /// Precedence climbing over the binary connectives.
    fn binary(&mut self, min_prec: u8) -> Result<Formula<VarRef, String>, ScriptError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let p = op.precedence();
            if p < min_prec {
                break;
            }
            self.next();
            let next_min = if op.right_assoc() { p } else { p + 1 };
            let rhs = self.binary(next_min)?;
            lhs = Formula::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula<VarRef, String>, ScriptError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "neg" => {
                self.next();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ident(s) if s == "Knows" => {
                self.next();
                let agent = self.ident("agent name after `Knows`")?;
                Ok(Formula::knows(agent, self.unary()?))
            }
            Tok::Ident(s) if s == "True" => {
                self.next();
                Ok(Formula::Const(true))
            }
            Tok::Ident(s) if s == "False" => {
                self.next();
                Ok(Formula::Const(false))
            }
            Tok::Ident(s) if s == "X" => Err(ScriptError::Syntax {
                pos: self.here(),
                message: "the time prefix `X k` is only allowed at the top of a specification"
                    .into(),
            }),
            Tok::LParen => {
                self.next();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(_) => Ok(Formula::Atom(self.var_ref()?)),
            _ => self.err("an expression"),
        }
    }
}

fn to_expr(f: &Formula<VarRef, String>) -> Option<Expr<VarRef>> {
    Some(match f {
        Formula::Const(b) => Expr::Const(*b),
        Formula::Atom(v) => Expr::Var(v.clone()),
        Formula::Not(g) => Expr::not(to_expr(g)?),
        Formula::Bin(op, a, b) => Expr::bin(*op, to_expr(a)?, to_expr(b)?),
        Formula::Knows(..) => return None,
    })
}
