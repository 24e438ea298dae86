//! Protocol scripting language: lexer, parser, pretty-printer and the
//! name-resolution pass that flattens a script into a [`CheckedSystem`].

pub mod ast;
mod check;
mod lexer;
mod parser;

use std::fmt;

use thiserror::Error;

pub use check::{check_script, formula_vars, CheckedAgent, CheckedSpec, CheckedSystem, Command, VarId};
pub use lexer::{tokenize, Tok};
pub use parser::{parse_formula, parse_script};

/// 1-based line/column position in the source text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScriptError {
    #[error("{pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: unbound variable `{name}`")]
    UnboundVariable { pos: Pos, name: String },
    #[error("{pos}: {message}")]
    ArityMismatch { pos: Pos, message: String },
    #[error("{pos}: init_cond refers to protocol local `{name}`")]
    LocalInInit { pos: Pos, name: String },
    #[error("{pos}: duplicate name `{name}`")]
    DuplicateName { pos: Pos, name: String },
    #[error("{pos}: unknown protocol \"{name}\"")]
    UnknownProtocol { pos: Pos, name: String },
    #[error("{pos}: unknown agent `{name}`")]
    UnknownAgent { pos: Pos, name: String },
    #[error("{pos}: index {index} out of bounds for `{name}` of size {size}")]
    IndexOutOfBounds {
        pos: Pos,
        name: String,
        index: u32,
        size: u32,
    },
    #[error("{pos}: {message}")]
    ShapeMismatch { pos: Pos, message: String },
    #[error("{pos}: specification time {time} exceeds the run horizon {horizon}")]
    TimeBeyondHorizon { pos: Pos, time: u32, horizon: usize },
}

impl ScriptError {
    pub fn pos(&self) -> Pos {
        match self {
            ScriptError::Syntax { pos, .. }
            | ScriptError::UnboundVariable { pos, .. }
            | ScriptError::ArityMismatch { pos, .. }
            | ScriptError::LocalInInit { pos, .. }
            | ScriptError::DuplicateName { pos, .. }
            | ScriptError::UnknownProtocol { pos, .. }
            | ScriptError::UnknownAgent { pos, .. }
            | ScriptError::IndexOutOfBounds { pos, .. }
            | ScriptError::ShapeMismatch { pos, .. }
            | ScriptError::TimeBeyondHorizon { pos, .. } => *pos,
        }
    }

    /// The message without the leading position, for `file:line:col: msg`
    /// diagnostics.
    pub fn message(&self) -> String {
        let full = self.to_string();
        let prefix = format!("{}: ", self.pos());
        full.strip_prefix(&prefix).unwrap_or(&full).to_string()
    }
}

/// Parse and check in one step.
pub fn load_system(text: &str) -> Result<CheckedSystem, ScriptError> {
    check_script(&parse_script(text)?)
}
