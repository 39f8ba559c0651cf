//! Hidden-variable factorization of deterministic potentials.
//!
//! A deterministic potential ψ(y, x) = [y = f(x)] is rewritten as
//! Σ_b h′(y, b) · ∏ᵢ g′ᵢ(xᵢ, b), where the states of the hidden variable are
//! the rectangles of a base and h′ holds the signed occurrence counts of each
//! rectangle in the expression generating each level set of f.

mod expr;
mod known;
mod rect;

use std::collections::BTreeMap;

pub use expr::Expression;
pub use known::{known_base, known_base_conjunction, known_base_max};
pub use rect::Hyperrectangle;

use crate::error::{Error, Result};
use crate::network::DeterministicFunction;
use crate::space::{ConfigSet, Space};

/// Rectangles plus one generating expression per child state with a
/// non-empty level set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Base {
    space: Space,
    rectangles: Vec<Hyperrectangle>,
    expressions: BTreeMap<usize, Expression>,
}

impl Base {
    pub fn new(
        space: Space,
        rectangles: Vec<Hyperrectangle>,
        expressions: BTreeMap<usize, Expression>,
    ) -> Result<Self> {
        rect::check_space(&space)?;
        for (i, r) in rectangles.iter().enumerate() {
            if r.dims().len() != space.dims() {
                return Err(Error::ShapeMismatch(format!("rectangle R{} has wrong arity", i + 1)));
            }
            if rectangles[..i].contains(r) {
                return Err(Error::ShapeMismatch(format!("rectangle R{} is a duplicate", i + 1)));
            }
        }
        for (state, e) in &expressions {
            if e.max_leaf() >= rectangles.len() {
                return Err(Error::ShapeMismatch(format!(
                    "expression for state {state} references R{} but the base has {} rectangles",
                    e.max_leaf() + 1,
                    rectangles.len()
                )));
            }
        }
        Ok(Base {
            space,
            rectangles,
            expressions,
        })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn rectangles(&self) -> &[Hyperrectangle] {
        &self.rectangles
    }

    pub fn expressions(&self) -> &BTreeMap<usize, Expression> {
        &self.expressions
    }

    pub fn len(&self) -> usize {
        self.rectangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rectangles.is_empty()
    }

    pub fn rect_sets(&self) -> Vec<ConfigSet> {
        self.rectangles.iter().map(|r| r.to_set(&self.space)).collect()
    }
}

/// Set value of `expr` over the rectangles of `base`.
pub fn eval_expression(expr: &Expression, base: &Base) -> Result<ConfigSet> {
    expr.eval(&base.rect_sets())
}

/// Integer tables of a hidden-variable factorization.
///
/// `h[y][b]` is the coefficient of hidden state `b` for child state `y`;
/// `g[i][x][b]` is the indicator that state `x` of parent `i` occurs in
/// rectangle `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorizedForm {
    child_card: usize,
    parent_cards: Vec<usize>,
    rectangles: Vec<Hyperrectangle>,
    h: Vec<Vec<i64>>,
    g: Vec<Vec<Vec<i64>>>,
}

impl FactorizedForm {
    pub fn from_parts(
        child_card: usize,
        parent_cards: Vec<usize>,
        rectangles: Vec<Hyperrectangle>,
        h: Vec<Vec<i64>>,
        g: Vec<Vec<Vec<i64>>>,
    ) -> Result<Self> {
        let k = rectangles.len();
        let bad = |m: &str| Err(Error::ShapeMismatch(m.to_string()));
        if k == 0 {
            return bad("hidden variable needs at least one state");
        }
        if h.len() != child_card || h.iter().any(|row| row.len() != k) {
            return bad("h table must be child states x hidden states");
        }
        if g.len() != parent_cards.len() {
            return bad("one g table per parent required");
        }
        for (gi, &card) in g.iter().zip(&parent_cards) {
            if gi.len() != card || gi.iter().any(|row| row.len() != k) {
                return bad("g table must be parent states x hidden states");
            }
        }
        if rectangles.iter().any(|r| r.dims().len() != parent_cards.len()) {
            return bad("rectangle arity differs from parent count");
        }
        Ok(FactorizedForm {
            child_card,
            parent_cards,
            rectangles,
            h,
            g,
        })
    }

    pub fn child_card(&self) -> usize {
        self.child_card
    }

    pub fn parent_cards(&self) -> &[usize] {
        &self.parent_cards
    }

    pub fn hidden_states(&self) -> usize {
        self.rectangles.len()
    }

    pub fn rectangles(&self) -> &[Hyperrectangle] {
        &self.rectangles
    }

    pub fn h(&self) -> &[Vec<i64>] {
        &self.h
    }

    pub fn g(&self) -> &[Vec<Vec<i64>>] {
        &self.g
    }

    pub fn set_h(&mut self, child_state: usize, hidden_state: usize, value: i64) {
        self.h[child_state][hidden_state] = value;
    }

    /// Σ_b h′(y, b) · ∏ᵢ g′ᵢ(xᵢ, b).
    pub fn reconstruct(&self, child_state: usize, config: &[usize]) -> i64 {
        (0..self.hidden_states())
            .map(|b| {
                let g: i64 = config.iter().enumerate().map(|(i, &x)| self.g[i][x][b]).product();
                self.h[child_state][b] * g
            })
            .sum()
    }

    /// Total number of cells in h′ and all g′ tables.
    pub fn table_cells(&self) -> usize {
        let k = self.hidden_states();
        k * (self.child_card + self.parent_cards.iter().sum::<usize>())
    }
}

fn indicator_tables(parent_cards: &[usize], rectangles: &[Hyperrectangle]) -> Vec<Vec<Vec<i64>>> {
    parent_cards
        .iter()
        .enumerate()
        .map(|(i, &card)| {
            (0..card)
                .map(|x| rectangles.iter().map(|r| r.allows(i, x) as i64).collect())
                .collect()
        })
        .collect()
}

/// One hidden state per parent configuration.
pub fn trivial_factorization(d: &DeterministicFunction) -> FactorizedForm {
    let space = d.space();
    let rectangles: Vec<Hyperrectangle> = space.configs().map(|x| Hyperrectangle::point(&x)).collect();
    let h = (0..d.child_card())
        .map(|y| d.outputs().iter().map(|&fx| (fx == y) as i64).collect())
        .collect();
    let g = indicator_tables(d.parent_cards(), &rectangles);
    FactorizedForm::from_parts(d.child_card(), d.parent_cards().to_vec(), rectangles, h, g)
        .expect("trivial factorization shapes")
}

/// Level set {x : f(x) = y} for every child state (possibly empty).
pub fn level_sets(d: &DeterministicFunction) -> Vec<ConfigSet> {
    let size = d.space().size();
    let mut sets = vec![ConfigSet::empty(size); d.child_card()];
    for (i, &y) in d.outputs().iter().enumerate() {
        sets[y].insert(i);
    }
    sets
}

/// h′ from the expressions' signed rectangle counts, g′ from rectangle membership.
pub fn build_factorized_form(d: &DeterministicFunction, base: &Base) -> Result<FactorizedForm> {
    if base.space().cards() != d.parent_cards() {
        return Err(Error::ShapeMismatch(format!(
            "base space {:?} differs from parent cardinalities {:?}",
            base.space().cards(),
            d.parent_cards()
        )));
    }
    let sets = base.rect_sets();
    let levels = level_sets(d);
    if let Some(&state) = base.expressions().keys().find(|&&s| s >= d.child_card()) {
        return Err(Error::ShapeMismatch(format!(
            "expression for child state {state} out of range"
        )));
    }
    let k = base.len();
    let mut h = vec![vec![0i64; k]; d.child_card()];
    for (y, level) in levels.iter().enumerate() {
        match base.expressions().get(&y) {
            Some(e) => {
                if e.eval(&sets)? != *level {
                    return Err(Error::LevelSetMismatch { state: y });
                }
                h[y] = e.coefficients(k);
            }
            None if level.is_empty() => {}
            None => return Err(Error::LevelSetMismatch { state: y }),
        }
    }
    let g = indicator_tables(d.parent_cards(), base.rectangles());
    FactorizedForm::from_parts(
        d.child_card(),
        d.parent_cards().to_vec(),
        base.rectangles().to_vec(),
        h,
        g,
    )
}

/// Outcome of checking a factorization cell by cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Mismatch {
        child_state: usize,
        config: Vec<usize>,
        expected: i64,
        found: i64,
    },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

/// Exact integer check that the factorized form reproduces [y = f(x)] for
/// every (y, x). Reports the first violation in (x, y) index order.
pub fn verify_factorization(d: &DeterministicFunction, ff: &FactorizedForm) -> Result<Verdict> {
    if ff.child_card() != d.child_card() || ff.parent_cards() != d.parent_cards() {
        return Err(Error::ShapeMismatch(
            "factorized form and function have different shapes".into(),
        ));
    }
    for (i, x) in d.space().configs().enumerate() {
        let fx = d.outputs()[i];
        for y in 0..d.child_card() {
            let expected = (y == fx) as i64;
            let found = ff.reconstruct(y, &x);
            if found != expected {
                return Ok(Verdict::Mismatch {
                    child_state: y,
                    config: x,
                    expected,
                    found,
                });
            }
        }
    }
    Ok(Verdict::Valid)
}
