//! Hard findings: per-variable 0/1 indicator vectors.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::VarId;

/// Evidence as 0/1 indicator vectors, one entry per state. Variables without
/// an entry carry an implicit all-ones vector.
///
/// An all-zero vector is accepted: it encodes an impossible finding and makes
/// inference fail with [`Error::ZeroNormalizer`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Evidence {
    vectors: BTreeMap<VarId, Vec<u8>>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, var: VarId, vector: Vec<u8>) -> Result<()> {
        if vector.is_empty() {
            return Err(Error::InvalidEvidence(format!("empty vector for variable {var}")));
        }
        if vector.iter().any(|&v| v > 1) {
            return Err(Error::InvalidEvidence(format!(
                "vector for variable {var} has entries other than 0 and 1"
            )));
        }
        self.vectors.insert(var, vector);
        Ok(())
    }

    /// Convenience for an observed state.
    pub fn observe(&mut self, var: VarId, card: usize, state: usize) -> Result<()> {
        if state >= card {
            return Err(Error::InvalidEvidence(format!(
                "state {state} out of range for variable {var}"
            )));
        }
        let mut v = vec![0; card];
        v[state] = 1;
        self.set(var, v)
    }

    pub fn get(&self, var: VarId) -> Option<&[u8]> {
        self.vectors.get(&var).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &[u8])> {
        self.vectors.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Whether a partial assignment is consistent with the evidence: every
    /// assigned variable that has a finding must sit on a state marked 1.
    pub fn is_consistent(&self, assignment: &[(VarId, usize)]) -> bool {
        assignment
            .iter()
            .all(|&(var, state)| self.get(var).is_none_or(|v| v.get(state) == Some(&1)))
    }
}
