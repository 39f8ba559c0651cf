use std::fmt;

use crate::error::{Error, Result};
use crate::space::{ConfigSet, Space};

/// Cartesian product of non-empty per-parent state subsets, each stored as
/// a bitmask over that parent's states (so cardinalities are capped at 64).
///
/// The derived ordering compares the masks lexicographically, first parent
/// first; this is the canonical rectangle order used everywhere.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hyperrectangle {
    dims: Vec<u64>,
}

pub(crate) fn check_space(space: &Space) -> Result<()> {
    if let Some(&c) = space.cards().iter().find(|&&c| c > 64) {
        return Err(Error::ShapeMismatch(format!(
            "hyperrectangles support at most 64 states per parent, found {c}"
        )));
    }
    Ok(())
}

fn range_mask(card: usize) -> u64 {
    if card == 64 {
        u64::MAX
    } else {
        (1u64 << card) - 1
    }
}

impl Hyperrectangle {
    pub fn new(dims: Vec<u64>, space: &Space) -> Result<Self> {
        check_space(space)?;
        if dims.len() != space.dims() {
            return Err(Error::ShapeMismatch(format!(
                "rectangle has {} dimensions, space has {}",
                dims.len(),
                space.dims()
            )));
        }
        for (i, (&mask, &card)) in dims.iter().zip(space.cards()).enumerate() {
            if mask == 0 {
                return Err(Error::ShapeMismatch(format!("dimension {i} of a rectangle is empty")));
            }
            if mask & !range_mask(card) != 0 {
                return Err(Error::ShapeMismatch(format!(
                    "dimension {i} of a rectangle names a state outside 0..{card}"
                )));
            }
        }
        Ok(Hyperrectangle { dims })
    }

    pub fn from_states(states: &[Vec<usize>], space: &Space) -> Result<Self> {
        let mut dims = Vec::with_capacity(states.len());
        for (i, list) in states.iter().enumerate() {
            let mut mask = 0u64;
            for &s in list {
                if s >= 64 || space.cards().get(i).is_none_or(|&c| s >= c) {
                    return Err(Error::ShapeMismatch(format!("state {s} out of range in dimension {i}")));
                }
                mask |= 1 << s;
            }
            dims.push(mask);
        }
        Self::new(dims, space)
    }

    pub fn full(space: &Space) -> Self {
        Hyperrectangle {
            dims: space.cards().iter().map(|&c| range_mask(c)).collect(),
        }
    }

    pub fn point(config: &[usize]) -> Self {
        Hyperrectangle {
            dims: config.iter().map(|&x| 1u64 << x).collect(),
        }
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    /// Whether state `x` of parent `dim` occurs in the rectangle; this is g′ᵢ.
    pub fn allows(&self, dim: usize, x: usize) -> bool {
        x < 64 && self.dims[dim] & (1 << x) != 0
    }

    pub fn contains(&self, config: &[usize]) -> bool {
        config.iter().enumerate().all(|(i, &x)| self.allows(i, x))
    }

    pub fn states(&self, dim: usize) -> Vec<usize> {
        (0..64).filter(|&s| self.allows(dim, s)).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.dims.iter().map(|m| m.count_ones() as usize).product()
    }

    pub fn to_set(&self, space: &Space) -> ConfigSet {
        ConfigSet::from_indices(
            space.size(),
            space
                .configs()
                .enumerate()
                .filter(|(_, x)| self.contains(x))
                .map(|(i, _)| i),
        )
    }
}

impl fmt::Debug for Hyperrectangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = (0..self.dims.len())
            .map(|d| {
                let s: Vec<String> = self.states(d).iter().map(usize::to_string).collect();
                format!("{{{}}}", s.join(","))
            })
            .collect();
        write!(f, "{}", parts.join("x"))
    }
}
