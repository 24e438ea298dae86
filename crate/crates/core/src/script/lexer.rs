use std::fmt;

use super::{Pos, ScriptError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(u32),
    Str(String),
    Colon,
    Comma,
    Semi,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    DotDot,
    Dot,
    Eq,
    Assign,
    ActOpen,
    ActClose,
    And,
    Or,
    Implies,
    Iff,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Colon => f.write_str("`:`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::DotDot => f.write_str("`..`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Assign => f.write_str("`:=`"),
            Tok::ActOpen => f.write_str("`<|`"),
            Tok::ActClose => f.write_str("`|>`"),
            Tok::And => f.write_str("`/\\`"),
            Tok::Or => f.write_str("`\\/`"),
            Tok::Implies => f.write_str("`=>`"),
            Tok::Iff => f.write_str("`<=>`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

/// Split a script into tokens. Comments run from `--` to end of line.
pub fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, ScriptError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let peek = |k: usize| chars.get(i + k).copied();
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '-' && peek(1) == Some('-') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse::<u32>().map_err(|_| ScriptError::Syntax {
                pos,
                message: format!("numeric literal `{text}` out of range"),
            })?;
            out.push((Tok::Num(n), pos));
            continue;
        }
        if c == '"' {
            bump!();
            let start = i;
            while i < chars.len() && chars[i] != '"' {
                bump!();
            }
            if i >= chars.len() {
                return Err(ScriptError::Syntax {
                    pos,
                    message: "unterminated string literal".into(),
                });
            }
            let s: String = chars[start..i].iter().collect();
            bump!();
            out.push((Tok::Str(s), pos));
            continue;
        }
        let (tok, len) = match (c, peek(1), peek(2)) {
            ('<', Some('='), Some('>')) => (Tok::Iff, 3),
            ('<', Some('|'), _) => (Tok::ActOpen, 2),
            ('|', Some('>'), _) => (Tok::ActClose, 2),
            ('/', Some('\\'), _) => (Tok::And, 2),
            ('\\', Some('/'), _) => (Tok::Or, 2),
            ('=', Some('>'), _) => (Tok::Implies, 2),
            (':', Some('='), _) => (Tok::Assign, 2),
            ('.', Some('.'), _) => (Tok::DotDot, 2),
            (':', ..) => (Tok::Colon, 1),
            (',', ..) => (Tok::Comma, 1),
            (';', ..) => (Tok::Semi, 1),
            ('(', ..) => (Tok::LParen, 1),
            (')', ..) => (Tok::RParen, 1),
            ('[', ..) => (Tok::LBracket, 1),
            (']', ..) => (Tok::RBracket, 1),
            ('{', ..) => (Tok::LBrace, 1),
            ('}', ..) => (Tok::RBrace, 1),
            ('.', ..) => (Tok::Dot, 1),
            ('=', ..) => (Tok::Eq, 1),
            _ => {
                return Err(ScriptError::Syntax {
                    pos,
                    message: format!("unexpected character `{c}`"),
                })
            }
        };
        for _ in 0..len {
            bump!();
        }
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}
