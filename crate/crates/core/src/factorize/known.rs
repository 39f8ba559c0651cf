//! Closed-form bases for common function families.

use std::collections::BTreeMap;

use super::{Base, Expression, Hyperrectangle};
use crate::error::{Error, Result};
use crate::network::{DeterministicFunction, FunctionKind};
use crate::space::Space;

/// Conjunction of literals over binary parents: `positive[i]` is false for a
/// negated parent. Base {R1 = 𝒳, R2 = the single satisfying point} with
/// 𝒴₁ = R2 and 𝒴₀ = R1 ⊖ R2.
pub fn known_base_conjunction(positive: &[bool]) -> Result<Base> {
    if positive.is_empty() {
        return Err(Error::ShapeMismatch("conjunction needs at least one literal".into()));
    }
    let space = Space::new(vec![2; positive.len()]);
    let point: Vec<usize> = positive.iter().map(|&p| p as usize).collect();
    Base::new(
        space.clone(),
        vec![Hyperrectangle::full(&space), Hyperrectangle::point(&point)],
        BTreeMap::from([
            (0, Expression::diff(Expression::Rect(0), Expression::Rect(1))),
            (1, Expression::Rect(1)),
        ]),
    )
}

/// MAX over parents sharing an ordered state scale: nested rectangles
/// Rℓ = ×ᵢ {0..=ℓ}, with 𝒴₀ = R0 and 𝒴ℓ = Rℓ ⊖ Rℓ₋₁.
pub fn known_base_max(parent_cards: &[usize]) -> Result<Base> {
    if parent_cards.is_empty() {
        return Err(Error::ShapeMismatch("MAX needs at least one parent".into()));
    }
    let space = Space::new(parent_cards.to_vec());
    let top = *parent_cards.iter().max().unwrap();
    let mut rects = Vec::with_capacity(top);
    let mut exprs = BTreeMap::new();
    for level in 0..top {
        let states: Vec<Vec<usize>> = parent_cards.iter().map(|&c| (0..=level.min(c - 1)).collect()).collect();
        rects.push(Hyperrectangle::from_states(&states, &space)?);
        let e = if level == 0 {
            Expression::Rect(0)
        } else {
            Expression::diff(Expression::Rect(level), Expression::Rect(level - 1))
        };
        exprs.insert(level, e);
    }
    Base::new(space, rects, exprs)
}

/// Closed-form base when the function is a recognised conjunction or MAX.
pub fn known_base(d: &DeterministicFunction) -> Option<Base> {
    match d.kind() {
        FunctionKind::Conjunction { positive } => known_base_conjunction(&positive).ok(),
        FunctionKind::Max => known_base_max(d.parent_cards()).ok(),
        _ => None,
    }
}
