//! Concrete syntax for formulas.
//!
//! Precedence, loose to tight: `->` `<->`, `\/`, `|`, `&`, prefix
//! `~ ! [] <> [u] <u>`. Binary connectives associate to the left except the
//! arrows, which associate to the right and are expanded away at parse time.
//! Atoms match `[a-z][a-z0-9_]*`; `dep` is reserved for dependence atoms.

use std::fmt;

use thiserror::Error;

use crate::formula::{negate, Formula, FRESH_PREFIX};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {pos}: {msg}")]
pub struct ParseError {
    /// Character offset into the input, 0-based.
    pub pos: usize,
    pub msg: String,
}

fn err<T>(pos: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { pos, msg: msg.into() })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Arrow,
    Iff,
    IdisOp,
    OrOp,
    AndOp,
    Neg,
    BoxOp,
    UBoxOp,
    DiaOp,
    UDiaOp,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(n) => return write!(f, "`{n}`"),
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Comma => "`,`",
            Tok::Semi => "`;`",
            Tok::Arrow => "`->`",
            Tok::Iff => "`<->`",
            Tok::IdisOp => "`\\/`",
            Tok::OrOp => "`|`",
            Tok::AndOp => "`&`",
            Tok::Neg => "negation",
            Tok::BoxOp => "`[]`",
            Tok::UBoxOp => "`[u]`",
            Tok::DiaOp => "`<>`",
            Tok::UDiaOp => "`<u>`",
        };
        f.write_str(s)
    }
}

fn lex(input: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = input.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i;
        match c {
            c if c.is_whitespace() => {
                i += 1;
            }
            '(' => {
                toks.push((pos, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((pos, Tok::RParen));
                i += 1;
            }
            ',' => {
                toks.push((pos, Tok::Comma));
                i += 1;
            }
            ';' => {
                toks.push((pos, Tok::Semi));
                i += 1;
            }
            '&' => {
                toks.push((pos, Tok::AndOp));
                i += 1;
            }
            '|' => {
                toks.push((pos, Tok::OrOp));
                i += 1;
            }
            '~' | '!' => {
                toks.push((pos, Tok::Neg));
                i += 1;
            }
            '\\' => {
                if chars.get(i + 1) == Some(&'/') {
                    toks.push((pos, Tok::IdisOp));
                    i += 2;
                } else {
                    return err(pos, "expected `\\/`");
                }
            }
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    toks.push((pos, Tok::Arrow));
                    i += 2;
                } else {
                    return err(pos, "expected `->`");
                }
            }
            '<' => {
                if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
                    toks.push((pos, Tok::Iff));
                    i += 3;
                } else if chars.get(i + 1) == Some(&'u') && chars.get(i + 2) == Some(&'>') {
                    toks.push((pos, Tok::UDiaOp));
                    i += 3;
                } else if chars.get(i + 1) == Some(&'>') {
                    toks.push((pos, Tok::DiaOp));
                    i += 2;
                } else {
                    return err(pos, "expected `<>`, `<u>`, or `<->`");
                }
            }
            '[' => {
                if chars.get(i + 1) == Some(&'u') && chars.get(i + 2) == Some(&']') {
                    toks.push((pos, Tok::UBoxOp));
                    i += 3;
                } else if chars.get(i + 1) == Some(&']') {
                    toks.push((pos, Tok::BoxOp));
                    i += 2;
                } else {
                    return err(pos, "expected `[]` or `[u]`");
                }
            }
            c if c.is_ascii_lowercase() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_lowercase() || chars[i].is_ascii_digit() || chars[i] == '_')
                {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                if name.starts_with('_') {
                    if name.starts_with(FRESH_PREFIX) {
                        return err(
                            start,
                            format!("`{name}` uses the reserved tool-generated prefix `{FRESH_PREFIX}`"),
                        );
                    }
                    return err(start, format!("atom `{name}` must start with a letter"));
                }
                toks.push((start, Tok::Ident(name)));
            }
            other => return err(pos, format!("unexpected character `{other}`")),
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn expect(&mut self, want: &Tok) -> Result<usize, ParseError> {
        match self.bump() {
            Some((p, ref t)) if t == want => Ok(p),
            Some((p, t)) => err(p, format!("expected {want}, found {t}")),
            None => err(self.end, format!("expected {want}, found end of input")),
        }
    }

    // Arrows expand immediately: `a -> b` is `!a | b` and `a <-> b` is the
    // conjunction of both implications, so arrows never reach the AST.
    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.idis()?;
        match self.peek() {
            Some(Tok::Arrow) => {
                let (p, _) = self.bump().unwrap();
                let rhs = self.formula()?;
                let neg = negate(&lhs).map_err(|e| ParseError { pos: p, msg: e.to_string() })?;
                Ok(Formula::or(neg, rhs))
            }
            Some(Tok::Iff) => {
                let (p, _) = self.bump().unwrap();
                let rhs = self.formula()?;
                let to_err = |e: crate::formula::NegationError| ParseError { pos: p, msg: e.to_string() };
                let fwd = Formula::or(negate(&lhs).map_err(to_err)?, rhs.clone());
                let bwd = Formula::or(negate(&rhs).map_err(to_err)?, lhs);
                Ok(Formula::and(fwd, bwd))
            }
            _ => Ok(lhs),
        }
    }

    fn idis(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.or()?;
        while matches!(self.peek(), Some(Tok::IdisOp)) {
            self.bump();
            f = Formula::idis(f, self.or()?);
        }
        Ok(f)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.and()?;
        while matches!(self.peek(), Some(Tok::OrOp)) {
            self.bump();
            f = Formula::or(f, self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while matches!(self.peek(), Some(Tok::AndOp)) {
            self.bump();
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Neg) => {
                let (p, _) = self.bump().unwrap();
                let body = self.unary()?;
                negate(&body).map_err(|e| ParseError { pos: p, msg: e.to_string() })
            }
            Some(Tok::BoxOp) => {
                self.bump();
                Ok(Formula::box_(self.unary()?))
            }
            Some(Tok::DiaOp) => {
                self.bump();
                Ok(Formula::dia(self.unary()?))
            }
            Some(Tok::UBoxOp) => {
                self.bump();
                Ok(Formula::ubox(self.unary()?))
            }
            Some(Tok::UDiaOp) => {
                self.bump();
                Ok(Formula::udia(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.bump() {
            Some((_, Tok::LParen)) => {
                let f = self.formula()?;
                self.expect(&Tok::RParen)?;
                Ok(f)
            }
            Some((_, Tok::Ident(name))) => {
                if name == "dep" {
                    self.dep_atom()
                } else {
                    Ok(Formula::Atom(name))
                }
            }
            Some((p, t)) => err(p, format!("expected a formula, found {t}")),
            None => err(self.end, "expected a formula, found end of input"),
        }
    }

    fn dep_atom(&mut self) -> Result<Formula, ParseError> {
        self.expect(&Tok::LParen)?;
        let mut args = Vec::new();
        if !matches!(self.peek(), Some(Tok::Semi)) {
            loop {
                let p = self.pos();
                let arg = self.formula()?;
                check_dep_body(&arg, p)?;
                args.push(arg);
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.bump();
                    }
                    Some(Tok::Semi) => break,
                    _ => {
                        let p = self.pos();
                        return err(p, "expected `,` or `;` in dependence atom");
                    }
                }
            }
        }
        self.expect(&Tok::Semi)?;
        let p = self.pos();
        let target = self.formula()?;
        check_dep_body(&target, p)?;
        self.expect(&Tok::RParen)?;
        Ok(Formula::dep(args, target))
    }
}

fn check_dep_body(f: &Formula, pos: usize) -> Result<(), ParseError> {
    if f.is_ml() {
        Ok(())
    } else {
        err(pos, "dependence-atom arguments must be plain modal formulas")
    }
}

/// Parses the concrete syntax into an AST. The result is always in negation
/// normal form: `~`/`!` over compound subformulas is pushed to the literals
/// while parsing, and negating `\/` or `dep` is reported as an error.
pub fn parse(input: &str) -> Result<Formula, ParseError> {
    let toks = lex(input)?;
    let end = input.chars().count();
    let mut p = Parser { toks, at: 0, end };
    let f = p.formula()?;
    if let Some((pos, t)) = p.bump() {
        return err(pos, format!("unexpected {t} after formula"));
    }
    Ok(f)
}
