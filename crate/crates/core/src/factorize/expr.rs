use std::fmt;

use crate::error::{Error, Result};
use crate::space::ConfigSet;

/// Tree over base rectangles built from proper difference and disjunctive
/// union. Leaves index into a base's rectangle list (0-based); the prefix
/// text form names them `R1`, `R2`, … (1-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expression {
    Rect(usize),
    /// Left minus right; legal only when right ⊆ left.
    Difference(Box<Expression>, Box<Expression>),
    /// Legal only when the operands are disjoint.
    Union(Box<Expression>, Box<Expression>),
}

impl Expression {
    pub fn diff(left: Expression, right: Expression) -> Self {
        Expression::Difference(Box::new(left), Box::new(right))
    }

    pub fn union(left: Expression, right: Expression) -> Self {
        Expression::Union(Box::new(left), Box::new(right))
    }

    /// Set value of the expression, checking legality at every node.
    pub fn eval(&self, rects: &[ConfigSet]) -> Result<ConfigSet> {
        match self {
            Expression::Rect(i) => rects
                .get(*i)
                .cloned()
                .ok_or_else(|| Error::ShapeMismatch(format!("expression references missing rectangle R{}", i + 1))),
            Expression::Difference(a, b) => {
                let (a, b) = (a.eval(rects)?, b.eval(rects)?);
                if !b.is_subset(&a) {
                    return Err(Error::IllegalDifference);
                }
                Ok(a.difference(&b))
            }
            Expression::Union(a, b) => {
                let (a, b) = (a.eval(rects)?, b.eval(rects)?);
                if !a.is_disjoint(&b) {
                    return Err(Error::IllegalUnion);
                }
                Ok(a.union(&b))
            }
        }
    }

    /// Signed occurrence count of each rectangle: + at the root, kept through
    /// unions and the left side of differences, flipped on the right side of
    /// differences.
    pub fn coefficients(&self, rect_count: usize) -> Vec<i64> {
        let mut out = vec![0; rect_count];
        self.accumulate(1, &mut out);
        out
    }

    fn accumulate(&self, sign: i64, out: &mut [i64]) {
        match self {
            Expression::Rect(i) => out[*i] += sign,
            Expression::Difference(a, b) => {
                a.accumulate(sign, out);
                b.accumulate(-sign, out);
            }
            Expression::Union(a, b) => {
                a.accumulate(sign, out);
                b.accumulate(sign, out);
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Expression::Rect(_) => 1,
            Expression::Difference(a, b) | Expression::Union(a, b) => a.leaf_count() + b.leaf_count(),
        }
    }

    pub fn max_leaf(&self) -> usize {
        match self {
            Expression::Rect(i) => *i,
            Expression::Difference(a, b) | Expression::Union(a, b) => a.max_leaf().max(b.max_leaf()),
        }
    }

    /// Parses the prefix form: `R3`, `(- R3 R6)`, `(+ (- R2 R4) R5)`.
    pub fn parse(text: &str) -> Result<Expression> {
        let tokens: Vec<String> = text
            .replace('(', " ( ")
            .replace(')', " ) ")
            .split_whitespace()
            .map(str::to_string)
            .collect();
        let mut pos = 0;
        let e = parse_tokens(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Formula(format!(
                "trailing input `{}` in expression",
                tokens[pos..].join(" ")
            )));
        }
        Ok(e)
    }
}

fn parse_tokens(tokens: &[String], pos: &mut usize) -> Result<Expression> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| Error::Formula("unexpected end of expression".into()))?;
    *pos += 1;
    if tok == "(" {
        let op = tokens
            .get(*pos)
            .ok_or_else(|| Error::Formula("missing operator".into()))?
            .clone();
        *pos += 1;
        let left = parse_tokens(tokens, pos)?;
        let right = parse_tokens(tokens, pos)?;
        if tokens.get(*pos).map(String::as_str) != Some(")") {
            return Err(Error::Formula("expected `)` after two operands".into()));
        }
        *pos += 1;
        return match op.as_str() {
            "-" => Ok(Expression::diff(left, right)),
            "+" => Ok(Expression::union(left, right)),
            other => Err(Error::Formula(format!("unknown operator `{other}`"))),
        };
    }
    let index = tok
        .strip_prefix('R')
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Formula(format!("expected rectangle name like R1, found `{tok}`")))?;
    Ok(Expression::Rect(index - 1))
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Rect(i) => write!(f, "R{}", i + 1),
            Expression::Difference(a, b) => write!(f, "(- {a} {b})"),
            Expression::Union(a, b) => write!(f, "(+ {a} {b})"),
        }
    }
}
