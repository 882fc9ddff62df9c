//! Entropy expressions over scheme variables.
//!
//! ```text
//! expr := 'H(' list ('|' list)? ')' | 'I(' list ';' list ('|' list)? ')'
//! list := var (',' var)*
//! var  := ('K' | 'S') ':' label
//! ```
//!
//! Whitespace is ignored between tokens.

use std::fmt;

use thiserror::Error;

use crate::info::{InfoError, VarId, VarKind};
use crate::scheme::Scheme;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error(transparent)]
    Info(#[from] InfoError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntropyExpr {
    /// `H(targets | givens)`
    Entropy { targets: Vec<VarId>, givens: Vec<VarId> },
    /// `I(left ; right | givens)`
    Mutual { left: Vec<VarId>, right: Vec<VarId>, givens: Vec<VarId> },
}

impl EntropyExpr {
    fn vars(&self) -> impl Iterator<Item = &VarId> {
        let (a, b, c): (&[VarId], &[VarId], &[VarId]) = match self {
            EntropyExpr::Entropy { targets, givens } => (targets, &[], givens),
            EntropyExpr::Mutual { left, right, givens } => (left, right, givens),
        };
        a.iter().chain(b).chain(c)
    }

    pub fn evaluate(&self, s: &Scheme) -> Result<f64, ExprError> {
        if let Some(v) = self.vars().find(|v| s.graph().class(&v.owner).is_err()) {
            return Err(ExprError::UnknownClass(v.owner.clone()));
        }
        let d = s.dist();
        Ok(match self {
            EntropyExpr::Entropy { targets, givens } => d.conditional_entropy(targets, givens)?,
            EntropyExpr::Mutual { left, right, givens } => d.conditional_mutual_information(left, right, givens)?,
        })
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, vars: &[VarId]) -> fmt::Result {
    let names: Vec<String> = vars.iter().map(ToString::to_string).collect();
    f.write_str(&names.join(","))
}

impl fmt::Display for EntropyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntropyExpr::Entropy { targets, givens } => {
                f.write_str("H(")?;
                write_list(f, targets)?;
                if !givens.is_empty() {
                    f.write_str("|")?;
                    write_list(f, givens)?;
                }
            }
            EntropyExpr::Mutual { left, right, givens } => {
                f.write_str("I(")?;
                write_list(f, left)?;
                f.write_str(";")?;
                write_list(f, right)?;
                if !givens.is_empty() {
                    f.write_str("|")?;
                    write_list(f, givens)?;
                }
            }
        }
        f.write_str(")")
    }
}

pub fn parse_entropy_expr(text: &str) -> Result<EntropyExpr, ExprError> {
    let mut p = Parser { text, pos: 0 };
    let expr = p.expr()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: impl Into<String>) -> ExprError {
        ExprError::Syntax { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<EntropyExpr, ExprError> {
        let head = self.peek();
        let expr = match head {
            Some('H') => {
                self.pos += 1;
                self.expect('(')?;
                let targets = self.list()?;
                let givens = self.givens()?;
                EntropyExpr::Entropy { targets, givens }
            }
            Some('I') => {
                self.pos += 1;
                self.expect('(')?;
                let left = self.list()?;
                self.expect(';')?;
                let right = self.list()?;
                let givens = self.givens()?;
                EntropyExpr::Mutual { left, right, givens }
            }
            _ => return Err(self.error("expected 'H(' or 'I('")),
        };
        self.expect(')')?;
        Ok(expr)
    }

    fn givens(&mut self) -> Result<Vec<VarId>, ExprError> {
        if self.eat('|') {
            self.list()
        } else {
            Ok(Vec::new())
        }
    }

    fn list(&mut self) -> Result<Vec<VarId>, ExprError> {
        let mut vars = vec![self.var()?];
        while self.eat(',') {
            vars.push(self.var()?);
        }
        Ok(vars)
    }

    fn var(&mut self) -> Result<VarId, ExprError> {
        let kind = match self.peek() {
            Some('K') => VarKind::Key,
            Some('S') => VarKind::Secret,
            _ => return Err(self.error("expected a variable 'K:<class>' or 'S:<class>'")),
        };
        self.pos += 1;
        self.expect(':')?;
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest
            .find(|c: char| c.is_whitespace() || matches!(c, ',' | '|' | ';' | '(' | ')' | ':'))
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.error("expected a class label"));
        }
        let owner = rest[..len].to_string();
        self.pos += len;
        Ok(VarId { kind, owner })
    }
}
