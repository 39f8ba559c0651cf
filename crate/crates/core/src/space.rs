//! Configuration spaces over discrete parents and bitsets of configurations.

use std::fmt;

/// Cartesian product of parent state ranges, indexed row-major with the
/// first dimension slowest.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Space {
    cards: Vec<usize>,
}

impl Space {
    pub fn new(cards: Vec<usize>) -> Self {
        assert!(cards.iter().all(|&c| c >= 1), "cardinalities must be positive");
        Space { cards }
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn dims(&self) -> usize {
        self.cards.len()
    }

    pub fn size(&self) -> usize {
        self.cards.iter().product()
    }

    pub fn index_of(&self, config: &[usize]) -> usize {
        debug_assert_eq!(config.len(), self.cards.len());
        config.iter().zip(&self.cards).fold(0, |acc, (&x, &c)| acc * c + x)
    }

    pub fn config_of(&self, mut index: usize) -> Vec<usize> {
        let mut config = vec![0; self.cards.len()];
        for (slot, &c) in config.iter_mut().zip(&self.cards).rev() {
            *slot = index % c;
            index /= c;
        }
        config
    }

    /// All configurations in index order.
    pub fn configs(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.size()).map(|i| self.config_of(i))
    }

    pub fn full_set(&self) -> ConfigSet {
        ConfigSet::full(self.size())
    }
}

/// Fixed-universe bitset of configuration indices.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConfigSet {
    universe: usize,
    words: Vec<u64>,
}

impl ConfigSet {
    pub fn empty(universe: usize) -> Self {
        ConfigSet {
            universe,
            words: vec![0; universe.div_ceil(64)],
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut s = Self::empty(universe);
        for i in 0..universe {
            s.insert(i);
        }
        s
    }

    pub fn from_indices(universe: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(universe);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.universe, "index {i} outside universe {}", self.universe);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.universe && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &ConfigSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &ConfigSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn intersects(&self, other: &ConfigSet) -> bool {
        !self.is_disjoint(other)
    }

    pub fn union(&self, other: &ConfigSet) -> ConfigSet {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn difference(&self, other: &ConfigSet) -> ConfigSet {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn intersection(&self, other: &ConfigSet) -> ConfigSet {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.universe).filter(move |&i| self.contains(i))
    }

    fn zip_with(&self, other: &ConfigSet, op: impl Fn(u64, u64) -> u64) -> ConfigSet {
        debug_assert_eq!(self.universe, other.universe);
        ConfigSet {
            universe: self.universe,
            words: self.words.iter().zip(&other.words).map(|(&a, &b)| op(a, b)).collect(),
        }
    }
}

impl fmt::Debug for ConfigSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
