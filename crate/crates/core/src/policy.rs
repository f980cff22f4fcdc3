// SPDX-License-Identifier: Apache-2.0

//! Monotone boolean access policies.
//!
//! Grammar (keywords are case-insensitive, AND binds tighter than OR, both
//! left-associative):
//!
//! ```text
//! expr   := term   ( OR  term   )*
//! term   := factor ( AND factor )*
//! factor := ATTR | '(' expr ')'
//! ATTR   := [A-Za-z0-9_]+
//! ```

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("policy parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub enum PolicyAst {
    Attr(String),
    And(Box<PolicyAst>, Box<PolicyAst>),
    Or(Box<PolicyAst>, Box<PolicyAst>),
}

impl PolicyAst {
    pub fn attr(name: impl Into<String>) -> Self {
        PolicyAst::Attr(name.into())
    }

    pub fn and(lhs: PolicyAst, rhs: PolicyAst) -> Self {
        PolicyAst::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: PolicyAst, rhs: PolicyAst) -> Self {
        PolicyAst::Or(Box::new(lhs), Box::new(rhs))
    }

    /// Left-nested AND chain `S1 AND S2 AND ... AND Sn`.
    pub fn and_chain<I, S>(attrs: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        attrs.into_iter().map(|a| PolicyAst::Attr(a.into())).reduce(PolicyAst::and)
    }

    /// Plain boolean evaluation of the formula.
    pub fn eval<S>(&self, attrs: &BTreeSet<S>) -> bool
    where
        S: Ord + std::borrow::Borrow<str>,
    {
        match self {
            PolicyAst::Attr(a) => attrs.contains(a.as_str()),
            PolicyAst::And(l, r) => l.eval(attrs) && r.eval(attrs),
            PolicyAst::Or(l, r) => l.eval(attrs) || r.eval(attrs),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PolicyAst::Attr(_) => 1,
            PolicyAst::And(l, r) | PolicyAst::Or(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    /// Distinct attribute names mentioned by the policy.
    pub fn attributes(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_attrs(&mut out);
        out
    }

    fn collect_attrs<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            PolicyAst::Attr(a) => {
                out.insert(a.as_str());
            }
            PolicyAst::And(l, r) | PolicyAst::Or(l, r) => {
                l.collect_attrs(out);
                r.collect_attrs(out);
            }
        }
    }
}

/// Fully parenthesized rendering; reparses to an equal tree.
impl fmt::Display for PolicyAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyAst::Attr(a) => f.write_str(a),
            PolicyAst::And(l, r) => write!(f, "({l} AND {r})"),
            PolicyAst::Or(l, r) => write!(f, "({l} OR {r})"),
        }
    }
}

impl std::str::FromStr for PolicyAst {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_policy(s)
    }
}

pub fn is_valid_attribute(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    And,
    Or,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            _ if b.is_ascii_alphanumeric() || b == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                let tok = if word.eq_ignore_ascii_case("and") {
                    Tok::And
                } else if word.eq_ignore_ascii_case("or") {
                    Tok::Or
                } else {
                    Tok::Ident(word.to_string())
                };
                toks.push((start, tok));
            }
            _ => {
                return Err(ParseError {
                    offset: i,
                    message: format!("unexpected character {:?}", text[i..].chars().next().unwrap()),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError { offset: self.offset(), message: message.into() }
    }

    fn expr(&mut self) -> Result<PolicyAst, ParseError> {
        let mut lhs = self.term()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = PolicyAst::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<PolicyAst, ParseError> {
        let mut lhs = self.factor()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = PolicyAst::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<PolicyAst, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(PolicyAst::Attr(name))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(_) => Err(self.err("expected attribute or `(`")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

pub fn parse_policy(text: &str) -> Result<PolicyAst, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError { offset: 0, message: "empty policy".into() });
    }
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let ast = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(ast)
}
