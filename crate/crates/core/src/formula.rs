//! Boolean formulas over named binary variables.
//!
//! Grammar, loosest binding first, all binary operators left-associative:
//!
//! ```text
//! iff     := implies ( "<=>" implies )*
//! implies := or ( "=>" or )*
//! or      := and ( "|" and )*
//! and     := unary ( "&" unary )*
//! unary   := "!" unary | atom | "(" iff ")"
//! ```

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Var(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn parse(text: &str) -> Result<Formula> {
        let tokens = tokenize(text)?;
        let mut parser = Parser { tokens, pos: 0 };
        let formula = parser.iff()?;
        if let Some((tok, at)) = parser.tokens.get(parser.pos) {
            return Err(Error::Formula(format!("unexpected `{tok}` at offset {at}")));
        }
        Ok(formula)
    }

    /// Evaluates under an assignment of truth values to variable names.
    pub fn eval(&self, assignment: &HashMap<String, bool>) -> Result<bool> {
        self.eval_with(&|name| assignment.get(name).copied())
    }

    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<bool>) -> Result<bool> {
        Ok(match self {
            Formula::Var(name) => lookup(name).ok_or_else(|| Error::UnboundVariable(name.clone()))?,
            Formula::Not(a) => !a.eval_with(lookup)?,
            Formula::And(a, b) => a.eval_with(lookup)? & b.eval_with(lookup)?,
            Formula::Or(a, b) => a.eval_with(lookup)? | b.eval_with(lookup)?,
            Formula::Implies(a, b) => !a.eval_with(lookup)? | b.eval_with(lookup)?,
            Formula::Iff(a, b) => a.eval_with(lookup)? == b.eval_with(lookup)?,
        })
    }

    /// Variable names in order of first occurrence.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Formula::Var(name) => {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
            Formula::Not(a) => a.collect_vars(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Var(name) => write!(f, "{name}"),
            Formula::Not(a) => write!(f, "!{a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} => {b})"),
            Formula::Iff(a, b) => write!(f, "({a} <=> {b})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    Iff,
    Open,
    Close,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "{s}"),
            Token::Not => write!(f, "!"),
            Token::And => write!(f, "&"),
            Token::Or => write!(f, "|"),
            Token::Implies => write!(f, "=>"),
            Token::Iff => write!(f, "<=>"),
            Token::Open => write!(f, "("),
            Token::Close => write!(f, ")"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (at, c) = chars[i];
        let rest = &text[at..];
        match c {
            c if c.is_whitespace() => i += 1,
            '!' => {
                out.push((Token::Not, at));
                i += 1;
            }
            '&' => {
                out.push((Token::And, at));
                i += 1;
            }
            '|' => {
                out.push((Token::Or, at));
                i += 1;
            }
            '(' => {
                out.push((Token::Open, at));
                i += 1;
            }
            ')' => {
                out.push((Token::Close, at));
                i += 1;
            }
            '=' if rest.starts_with("=>") => {
                out.push((Token::Implies, at));
                i += 2;
            }
            '<' if rest.starts_with("<=>") => {
                out.push((Token::Iff, at));
                i += 3;
            }
            c if c.is_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                let end = chars.get(i).map_or(text.len(), |&(p, _)| p);
                out.push((Token::Ident(text[chars[start].0..end].to_string()), at));
            }
            other => return Err(Error::Formula(format!("unexpected character `{other}` at offset {at}"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.0)
    }

    fn eat(&mut self, tok: &Token) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn binary(
        &mut self,
        op: Token,
        next: fn(&mut Parser) -> Result<Formula>,
        build: fn(Box<Formula>, Box<Formula>) -> Formula,
    ) -> Result<Formula> {
        let mut lhs = next(self)?;
        while self.eat(&op) {
            let rhs = next(self)?;
            lhs = build(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn iff(&mut self) -> Result<Formula> {
        self.binary(Token::Iff, Parser::implies, Formula::Iff)
    }

    fn implies(&mut self) -> Result<Formula> {
        self.binary(Token::Implies, Parser::or, Formula::Implies)
    }

    fn or(&mut self) -> Result<Formula> {
        self.binary(Token::Or, Parser::and, Formula::Or)
    }

    fn and(&mut self) -> Result<Formula> {
        self.binary(Token::And, Parser::unary, Formula::And)
    }

    fn unary(&mut self) -> Result<Formula> {
        let Some((tok, at)) = self.tokens.get(self.pos).cloned() else {
            return Err(Error::Formula("unexpected end of formula".into()));
        };
        self.pos += 1;
        match tok {
            Token::Not => Ok(Formula::Not(Box::new(self.unary()?))),
            Token::Ident(name) => Ok(Formula::Var(name)),
            Token::Open => {
                let inner = self.iff()?;
                if !self.eat(&Token::Close) {
                    return Err(Error::Formula(format!("unclosed parenthesis opened at offset {at}")));
                }
                Ok(inner)
            }
            other => Err(Error::Formula(format!("unexpected `{other}` at offset {at}"))),
        }
    }
}
