//! Real-valued tables over ordered variable scopes.
//!
//! Scopes are kept in ascending variable-id order and values are laid out
//! row-major with the first scope variable slowest. Entries may be negative:
//! factorized potentials need signed coefficients.

use crate::error::{Error, Result};
use crate::evidence::Evidence;
use crate::space::Space;
use crate::VarId;

#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    /// Builds a factor whose scope is already in canonical (ascending id) order.
    pub fn new(vars: &[(VarId, usize)], values: Vec<f64>) -> Result<Self> {
        if vars.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::ShapeMismatch(
                "factor scope must be strictly ascending by variable id".into(),
            ));
        }
        if vars.iter().any(|&(_, c)| c == 0) {
            return Err(Error::ShapeMismatch("zero cardinality in factor scope".into()));
        }
        let expected: usize = vars.iter().map(|&(_, c)| c).product();
        if values.len() != expected {
            return Err(Error::TableLength {
                what: format!("factor over {:?}", vars.iter().map(|v| v.0).collect::<Vec<_>>()),
                expected,
                found: values.len(),
            });
        }
        Ok(Factor {
            scope: vars.iter().map(|v| v.0).collect(),
            cards: vars.iter().map(|v| v.1).collect(),
            values,
        })
    }

    /// Builds a factor from a table laid out in an arbitrary variable order,
    /// permuting it into canonical order.
    pub fn from_layout(vars: &[(VarId, usize)], values: &[f64]) -> Result<Self> {
        let mut sorted: Vec<(usize, (VarId, usize))> = vars.iter().copied().enumerate().collect();
        sorted.sort_by_key(|&(_, (id, _))| id);
        if let Some(w) = sorted.windows(2).find(|w| w[0].1 .0 == w[1].1 .0) {
            return Err(Error::ShapeMismatch(format!(
                "variable {} appears twice in a factor scope",
                w[0].1 .0
            )));
        }
        let layout = Space::new(vars.iter().map(|v| v.1).collect());
        if values.len() != layout.size() {
            return Err(Error::TableLength {
                what: format!("table over {:?}", vars.iter().map(|v| v.0).collect::<Vec<_>>()),
                expected: layout.size(),
                found: values.len(),
            });
        }
        let canon: Vec<(VarId, usize)> = sorted.iter().map(|s| s.1).collect();
        let canon_space = Space::new(canon.iter().map(|v| v.1).collect());
        let mut out = vec![0.0; values.len()];
        let mut layout_config = vec![0; vars.len()];
        for (i, slot) in out.iter_mut().enumerate() {
            let config = canon_space.config_of(i);
            for (pos, &(orig, _)) in sorted.iter().enumerate() {
                layout_config[orig] = config[pos];
            }
            *slot = values[layout.index_of(&layout_config)];
        }
        Factor::new(&canon, out)
    }

    pub fn scalar(value: f64) -> Self {
        Factor {
            scope: Vec::new(),
            cards: Vec::new(),
            values: vec![value],
        }
    }

    pub fn ones(vars: &[(VarId, usize)]) -> Result<Self> {
        let size = vars.iter().map(|v| v.1).product();
        Factor::new(vars, vec![1.0; size])
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vars(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.scope.iter().copied().zip(self.cards.iter().copied())
    }

    pub fn card_of(&self, var: VarId) -> Option<usize> {
        self.position(var).map(|p| self.cards[p])
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.position(var).is_some()
    }

    fn position(&self, var: VarId) -> Option<usize> {
        self.scope.binary_search(&var).ok()
    }

    /// Value at a configuration given in scope order.
    pub fn get(&self, config: &[usize]) -> f64 {
        self.values[Space::new(self.cards.clone()).index_of(config)]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Pointwise product over the union of both scopes.
    pub fn multiply(&self, other: &Factor) -> Result<Factor> {
        let mut vars: Vec<(VarId, usize)> = Vec::with_capacity(self.scope.len() + other.scope.len());
        let (mut i, mut j) = (0, 0);
        while i < self.scope.len() || j < other.scope.len() {
            let a = self.scope.get(i).copied();
            let b = other.scope.get(j).copied();
            match (a, b) {
                (Some(x), Some(y)) if x == y => {
                    if self.cards[i] != other.cards[j] {
                        return Err(Error::CardinalityConflict {
                            var: x,
                            left: self.cards[i],
                            right: other.cards[j],
                        });
                    }
                    vars.push((x, self.cards[i]));
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x < y => {
                    vars.push((x, self.cards[i]));
                    i += 1;
                }
                (Some(x), None) => {
                    vars.push((x, self.cards[i]));
                    i += 1;
                }
                (_, Some(y)) => {
                    vars.push((y, other.cards[j]));
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }

        let stride_a = self.strides_over(&vars);
        let stride_b = other.strides_over(&vars);
        let size: usize = vars.iter().map(|v| v.1).product();
        let mut values = Vec::with_capacity(size);
        let mut assign = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            for d in (0..vars.len()).rev() {
                assign[d] += 1;
                ia += stride_a[d];
                ib += stride_b[d];
                if assign[d] < vars[d].1 {
                    break;
                }
                ia -= stride_a[d] * vars[d].1;
                ib -= stride_b[d] * vars[d].1;
                assign[d] = 0;
            }
        }
        Factor::new(&vars, values)
    }

    /// Strides of this factor's table along each variable of `vars` (0 when absent).
    fn strides_over(&self, vars: &[(VarId, usize)]) -> Vec<usize> {
        let mut own = vec![0; self.scope.len()];
        let mut s = 1;
        for k in (0..self.scope.len()).rev() {
            own[k] = s;
            s *= self.cards[k];
        }
        vars.iter()
            .map(|&(v, _)| self.position(v).map_or(0, |p| own[p]))
            .collect()
    }

    /// Sums `var` out of the factor.
    pub fn marginalize(&self, var: VarId) -> Result<Factor> {
        let pos = self.position(var).ok_or(Error::NotInScope(var))?;
        let card = self.cards[pos];
        let low: usize = self.cards[pos + 1..].iter().product();
        let mut out = vec![0.0; self.values.len() / card];
        for (idx, &v) in self.values.iter().enumerate() {
            let hi = idx / (card * low);
            let lo = idx % low;
            out[hi * low + lo] += v;
        }
        let vars: Vec<(VarId, usize)> = self.vars().filter(|&(v, _)| v != var).collect();
        Factor::new(&vars, out)
    }

    /// Zeroes every cell inconsistent with the evidence.
    pub fn insert_evidence(&self, evidence: &Evidence) -> Result<Factor> {
        let mut masks: Vec<(usize, &[u8])> = Vec::new();
        for (pos, (var, card)) in self.vars().enumerate() {
            if let Some(vector) = evidence.get(var) {
                if vector.len() != card {
                    return Err(Error::EvidenceLength {
                        var: var.to_string(),
                        expected: card,
                        found: vector.len(),
                    });
                }
                masks.push((pos, vector));
            }
        }
        if masks.is_empty() {
            return Ok(self.clone());
        }
        let space = Space::new(self.cards.clone());
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| {
                let config = space.config_of(idx);
                if masks.iter().all(|&(pos, vector)| vector[config[pos]] == 1) {
                    v
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Factor {
            scope: self.scope.clone(),
            cards: self.cards.clone(),
            values,
        })
    }

    /// Multiplies every cell by `k`.
    pub(crate) fn scaled(&self, k: f64) -> Factor {
        Factor {
            scope: self.scope.clone(),
            cards: self.cards.clone(),
            values: self.values.iter().map(|v| v * k).collect(),
        }
    }

    pub(crate) fn map_values(&self, f: impl Fn(f64) -> f64) -> Factor {
        Factor {
            scope: self.scope.clone(),
            cards: self.cards.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiply_by_ones_is_identity() {
        let f = Factor::new(&[(0, 2), (3, 3)], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let ones = Factor::ones(&[(0, 2), (3, 3)]).unwrap();
        assert_eq!(f.multiply(&ones).unwrap(), f);
    }

    #[test]
    fn multiply_same_scope_is_pointwise() {
        let a = Factor::new(&[(0, 2)], vec![2.0, 3.0]).unwrap();
        let b = Factor::new(&[(0, 2)], vec![5.0, 7.0]).unwrap();
        assert_eq!(a.multiply(&b).unwrap().values(), &[10.0, 21.0]);
    }

    #[test]
    fn multiply_disjoint_scopes_enumerates_all_pairs() {
        let a = Factor::new(&[(0, 2)], vec![1.0, -1.0]).unwrap();
        let b = Factor::new(&[(1, 2)], vec![1.0, -1.0]).unwrap();
        let p = a.multiply(&b).unwrap();
        assert_eq!(p.scope(), &[0, 1]);
        // (x, y) in row-major order: a[x] * b[y]
        let mut expected = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                expected.push(a.values()[x] * b.values()[y]);
            }
        }
        assert_eq!(p.values(), expected.as_slice());
        assert_eq!(p.values(), &[1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn multiply_rejects_cardinality_conflict() {
        let a = Factor::new(&[(0, 2)], vec![1.0, 1.0]).unwrap();
        let b = Factor::new(&[(0, 3)], vec![1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            a.multiply(&b),
            Err(Error::CardinalityConflict {
                var: 0,
                left: 2,
                right: 3
            })
        ));
    }

    #[test]
    fn marginalize_row_sums() {
        let f = Factor::new(&[(0, 2), (1, 2)], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let m = f.marginalize(1).unwrap();
        assert_eq!(m.scope(), &[0]);
        assert!((m.values()[0] - 0.3).abs() < 1e-15);
        assert!((m.values()[1] - 0.7).abs() < 1e-15);
        let first = f.marginalize(0).unwrap();
        assert!((first.values()[0] - 0.4).abs() < 1e-15);
        assert!((first.values()[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn marginalize_signed_cancellation() {
        let f = Factor::new(&[(4, 2)], vec![1.0, -1.0]).unwrap();
        let m = f.marginalize(4).unwrap();
        assert!(m.scope().is_empty());
        assert_eq!(m.values(), &[0.0]);
    }

    #[test]
    fn marginalize_missing_variable() {
        let f = Factor::new(&[(0, 2)], vec![1.0, 1.0]).unwrap();
        assert!(matches!(f.marginalize(1), Err(Error::NotInScope(1))));
    }

    #[test]
    fn from_layout_permutes_into_canonical_order() {
        // layout (v2, v0): rows over v2, columns over v0
        let f = Factor::from_layout(&[(2, 2), (0, 3)], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(f.scope(), &[0, 2]);
        assert_eq!(f.get(&[0, 1]), 4.0);
        assert_eq!(f.get(&[2, 0]), 3.0);
        assert!(Factor::from_layout(&[(1, 2), (1, 2)], &[0.0; 4]).is_err());
    }

    #[test]
    fn evidence_zeroes_inconsistent_cells() {
        let f = Factor::new(&[(0, 2)], vec![0.4, 0.6]).unwrap();
        let mut e = Evidence::new();
        e.set(0, vec![1, 0]).unwrap();
        assert_eq!(f.insert_evidence(&e).unwrap().values(), &[0.4, 0.0]);
        assert_eq!(f.insert_evidence(&Evidence::new()).unwrap(), f);
    }

    #[test]
    fn evidence_on_two_of_three_variables() {
        let values: Vec<f64> = (1..=8).map(f64::from).collect();
        let f = Factor::new(&[(0, 2), (1, 2), (2, 2)], values.clone()).unwrap();
        let mut e = Evidence::new();
        e.set(0, vec![0, 1]).unwrap();
        e.set(2, vec![1, 0]).unwrap();
        let out = f.insert_evidence(&e).unwrap();
        // consistency: x0 must be 1 and x2 must be 0
        for (idx, &v) in out.values().iter().enumerate() {
            let (x0, x2) = (idx >> 2 & 1, idx & 1);
            let keep = x0 == 1 && x2 == 0;
            assert_eq!(v, if keep { values[idx] } else { 0.0 }, "row {idx}");
        }
        let mut bad = Evidence::new();
        bad.set(1, vec![1, 0, 1]).unwrap();
        assert!(matches!(f.insert_evidence(&bad), Err(Error::EvidenceLength { .. })));
    }
}
