//! Minimal base of hyperrectangles.
//!
//! Iterative deepening on the base cardinality, starting from the number of
//! non-empty level sets, with a depth-first branch-and-bound over candidate
//! rectangles in canonical order. The first feasible base found at a given
//! size is therefore the lexicographically smallest one.
//!
//! Pruning uses three sound necessary conditions:
//!
//! * every configuration must be covered by some rectangle still selectable;
//! * every generated set is a union of atoms of the base (classes of
//!   configurations with identical rectangle membership), so an atom mixing
//!   `m` level sets needs at least ⌈log₂ m⌉ more rectangles to be split;
//! * the indicator of a legally generated set is an integer combination of
//!   the rectangle indicators, so the rational span of the base must contain
//!   every level set: rank(chosen ∪ level sets) ≤ k.
//!
//! A base passing all three is checked exactly by computing the closure of
//! set values reachable through legal ⊖/⊕ applications.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::factorize::{level_sets, Base, Expression, Hyperrectangle};
use crate::network::DeterministicFunction;
use crate::space::{ConfigSet, Space};

/// Non-empty level sets {x : f(x) = y}, keyed by child state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelSets {
    pub space: Space,
    pub sets: Vec<(usize, ConfigSet)>,
}

impl LevelSets {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.sets.iter().map(|(_, s)| s.len()).collect()
    }
}

pub fn target_sets(d: &DeterministicFunction) -> LevelSets {
    LevelSets {
        space: d.space(),
        sets: level_sets(d)
            .into_iter()
            .enumerate()
            .filter(|(_, s)| !s.is_empty())
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    /// Upper limit on the number of candidate rectangles enumerated.
    pub max_candidates: u128,
    /// Largest base cardinality the search will try.
    pub max_base_size: usize,
    /// Largest number of distinct set values kept by one closure computation.
    pub max_closure: usize,
    /// Search nodes expanded before giving up; unlike the time limit this
    /// stops at the same point on every run.
    pub max_nodes: u64,
    pub time_limit: Duration,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_candidates: 100_000,
            max_base_size: 16,
            max_closure: 50_000,
            max_nodes: u64::MAX,
            time_limit: Duration::from_secs(60),
        }
    }
}

impl SearchBudget {
    fn validate(&self) -> Result<()> {
        if self.max_candidates == 0
            || self.max_base_size == 0
            || self.max_closure == 0
            || self.max_nodes == 0
            || self.time_limit.is_zero()
        {
            return Err(Error::ShapeMismatch("search budget limits must be positive".into()));
        }
        Ok(())
    }
}

/// Counters describing how much work a search did. All deterministic.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub rectangles_enumerated: usize,
    pub nodes_expanded: u64,
    pub closure_checks: u64,
    /// Closure computations that hit `max_closure` before deciding.
    pub closure_unknown: u64,
    /// Largest base size whose search space was fully exhausted.
    pub exhausted_up_to: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MbhSolution {
    pub base: Base,
    /// True when every smaller cardinality was exhausted without unknowns.
    pub optimal: bool,
    /// Number of non-empty level sets.
    pub lower_bound: usize,
    pub stats: SearchStats,
}

/// Number of hyperrectangles in a space: ∏ᵢ (2^|𝒳ᵢ| − 1), saturating.
pub fn rectangle_count(cards: &[usize]) -> u128 {
    cards.iter().fold(1u128, |acc, &c| {
        let per = if c >= 127 { u128::MAX } else { (1u128 << c) - 1 };
        acc.saturating_mul(per)
    })
}

/// Every hyperrectangle of the space in canonical order (per-dimension
/// masks ascending, first dimension slowest).
pub fn enumerate_rectangles(cards: &[usize], budget: &SearchBudget) -> Result<Vec<Hyperrectangle>> {
    let count = rectangle_count(cards);
    if count > budget.max_candidates {
        return Err(Error::BudgetExceeded {
            what: "candidate rectangles".into(),
            count,
            limit: budget.max_candidates,
        });
    }
    let space = Space::new(cards.to_vec());
    let tops: Vec<u64> = cards.iter().map(|&c| (1u64 << c) - 1).collect();
    let mut masks = vec![1u64; cards.len()];
    let mut out = Vec::with_capacity(count as usize);
    loop {
        out.push(Hyperrectangle::new(masks.clone(), &space)?);
        let mut d = cards.len();
        loop {
            if d == 0 {
                return Ok(out);
            }
            d -= 1;
            if masks[d] < tops[d] {
                masks[d] += 1;
                break;
            }
            masks[d] = 1;
        }
    }
}

/// Witness for `target` from the rectangles' set values, `None` when the
/// closure is exhausted without reaching it. Hitting the closure cap is an
/// error, never `None`.
pub fn can_generate(target: &ConfigSet, rects: &[ConfigSet], budget: &SearchBudget) -> Result<Option<Expression>> {
    if target.is_empty() {
        // Empty values are never kept in the closure; R ⊖ R is the witness.
        return Ok((!rects.is_empty()).then(|| Expression::diff(Expression::Rect(0), Expression::Rect(0))));
    }
    match generate_all(std::slice::from_ref(target), rects, budget.max_closure) {
        ClosureOutcome::Found(mut w) => Ok(w.pop()),
        ClosureOutcome::Exhausted => Ok(None),
        ClosureOutcome::CapHit(n) => Err(Error::BudgetExceeded {
            what: "closure size".into(),
            count: n as u128,
            limit: budget.max_closure as u128,
        }),
    }
}

pub(crate) enum ClosureOutcome {
    Found(Vec<Expression>),
    Exhausted,
    CapHit(usize),
}

#[derive(Clone, Copy)]
enum Op {
    Leaf(usize),
    Diff(usize, usize),
    Union(usize, usize),
}

struct Closure<'t> {
    targets: &'t [ConfigSet],
    sets: Vec<ConfigSet>,
    ops: Vec<Op>,
    index: HashMap<ConfigSet, usize>,
    found: Vec<Option<usize>>,
    remaining: usize,
}

impl Closure<'_> {
    fn record(&mut self, set: ConfigSet, op: Op) -> Option<usize> {
        if set.is_empty() || self.index.contains_key(&set) {
            return None;
        }
        let id = self.sets.len();
        for (t, slot) in self.targets.iter().zip(self.found.iter_mut()) {
            if slot.is_none() && *t == set {
                *slot = Some(id);
                self.remaining -= 1;
            }
        }
        self.index.insert(set.clone(), id);
        self.sets.push(set);
        self.ops.push(op);
        Some(id)
    }

    fn combine(&self, a: usize, b: usize) -> Option<(ConfigSet, Op)> {
        let (sa, sb) = (&self.sets[a], &self.sets[b]);
        if sa.is_disjoint(sb) {
            Some((sa.union(sb), Op::Union(a, b)))
        } else if sb.is_subset(sa) {
            Some((sa.difference(sb), Op::Diff(a, b)))
        } else if sa.is_subset(sb) {
            Some((sb.difference(sa), Op::Diff(b, a)))
        } else {
            None
        }
    }

    fn witnesses(&self) -> Vec<Expression> {
        self.found
            .iter()
            .map(|id| to_expression(id.expect("all targets found"), &self.ops))
            .collect()
    }
}

/// Grows the set of reachable values in order of leaf count, so the first
/// witness recorded for a value is a smallest one.
pub(crate) fn generate_all(targets: &[ConfigSet], rects: &[ConfigSet], cap: usize) -> ClosureOutcome {
    let mut c = Closure {
        targets,
        sets: Vec::new(),
        ops: Vec::new(),
        index: HashMap::new(),
        found: vec![None; targets.len()],
        remaining: targets.len(),
    };
    let mut by_size: Vec<Vec<usize>> = vec![Vec::new(), Vec::new()];
    for (i, r) in rects.iter().enumerate() {
        if let Some(id) = c.record(r.clone(), Op::Leaf(i)) {
            by_size[1].push(id);
        }
    }

    let mut size = 2;
    while c.remaining > 0 {
        let largest = (1..by_size.len()).rev().find(|&s| !by_size[s].is_empty()).unwrap_or(0);
        if size > 2 * largest {
            break;
        }
        let mut fresh = Vec::new();
        for small in 1..=size / 2 {
            let large = size - small;
            if large >= by_size.len() {
                continue;
            }
            for (ai, &a) in by_size[small].iter().enumerate() {
                let start = if small == large { ai } else { 0 };
                for &b in &by_size[large][start..] {
                    let Some((set, op)) = c.combine(a, b) else { continue };
                    if let Some(id) = c.record(set, op) {
                        fresh.push(id);
                        if c.remaining == 0 {
                            return ClosureOutcome::Found(c.witnesses());
                        }
                        if c.sets.len() > cap {
                            return ClosureOutcome::CapHit(c.sets.len());
                        }
                    }
                }
            }
        }
        by_size.push(fresh);
        size += 1;
    }
    if c.remaining == 0 {
        ClosureOutcome::Found(c.witnesses())
    } else {
        ClosureOutcome::Exhausted
    }
}

fn to_expression(id: usize, ops: &[Op]) -> Expression {
    match ops[id] {
        Op::Leaf(r) => Expression::Rect(r),
        Op::Diff(a, b) => Expression::diff(to_expression(a, ops), to_expression(b, ops)),
        Op::Union(a, b) => Expression::union(to_expression(a, ops), to_expression(b, ops)),
    }
}

/// Exact incremental row space over the rationals, kept as integer rows in
/// echelon order (each row is zero at the pivots of earlier rows).
#[derive(Clone, Debug, Default)]
struct RowSpace {
    rows: Vec<(usize, Vec<i128>)>,
    /// Set when intermediate values overflowed; the rank is then unreliable.
    overflow: bool,
}

impl RowSpace {
    fn rank(&self) -> usize {
        self.rows.len()
    }

    fn insert(&mut self, set: &ConfigSet) {
        let mut v: Vec<i128> = (0..set.universe()).map(|i| set.contains(i) as i128).collect();
        for (pivot, row) in &self.rows {
            let b = v[*pivot];
            if b == 0 {
                continue;
            }
            let a = row[*pivot];
            for (x, &r) in v.iter_mut().zip(row) {
                match x
                    .checked_mul(a)
                    .and_then(|p| r.checked_mul(b).and_then(|q| p.checked_sub(q)))
                {
                    Some(n) => *x = n,
                    None => {
                        self.overflow = true;
                        return;
                    }
                }
            }
            let g = v.iter().fold(0i128, |g, &x| gcd(g, x.abs()));
            if g > 1 {
                v.iter_mut().for_each(|x| *x /= g);
            }
        }
        if let Some(pivot) = v.iter().position(|&x| x != 0) {
            self.rows.push((pivot, v));
        }
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

struct Search<'a> {
    levels: &'a LevelSets,
    level_of: Vec<usize>,
    cand_sets: Vec<ConfigSet>,
    suffix_union: Vec<ConfigSet>,
    budget: &'a SearchBudget,
    deadline: Instant,
    stats: SearchStats,
    unknown_at_size: bool,
    halted: Option<Halt>,
}

#[derive(Clone, Copy)]
enum Halt {
    Time,
    Nodes,
}

enum Leaf {
    Feasible(Vec<usize>, Vec<Expression>),
    None,
}

impl Search<'_> {
    fn run(&mut self, k: usize) -> Leaf {
        let mut basis = RowSpace::default();
        for (_, s) in &self.levels.sets {
            basis.insert(s);
        }
        let universe = self.levels.space.size();
        let mut chosen = Vec::with_capacity(k);
        self.dfs(0, k, &mut chosen, &basis, &ConfigSet::empty(universe))
    }

    fn dfs(&mut self, start: usize, k: usize, chosen: &mut Vec<usize>, basis: &RowSpace, covered: &ConfigSet) -> Leaf {
        self.stats.nodes_expanded += 1;
        if self.stats.nodes_expanded > self.budget.max_nodes {
            self.halted = Some(Halt::Nodes);
        } else if self.stats.nodes_expanded.is_multiple_of(1024) && Instant::now() > self.deadline {
            self.halted = Some(Halt::Time);
        }
        if self.halted.is_some() {
            return Leaf::None;
        }
        let left = k - chosen.len();
        if left == 0 {
            return self.check_leaf(chosen);
        }
        for c in start..self.cand_sets.len() {
            if self.cand_sets.len() - c < left {
                break;
            }
            let cover = covered.union(&self.cand_sets[c]);
            // configurations nobody can cover any more
            let reachable = cover.union(self.suffix_union.get(c + 1).unwrap_or(&cover));
            if reachable.len() < self.levels.space.size() {
                continue;
            }
            let mut next = basis.clone();
            next.insert(&self.cand_sets[c]);
            if !next.overflow && next.rank() > k {
                continue;
            }
            chosen.push(c);
            if self.atoms_splittable(chosen, left - 1) {
                if let Leaf::Feasible(b, e) = self.dfs(c + 1, k, chosen, &next, &cover) {
                    return Leaf::Feasible(b, e);
                }
            }
            chosen.pop();
            if self.halted.is_some() {
                break;
            }
        }
        Leaf::None
    }

    /// Every atom of the chosen rectangles must be splittable into pure
    /// level-set pieces with the rectangles still to be added.
    fn atoms_splittable(&self, chosen: &[usize], left: usize) -> bool {
        let mut atoms: HashMap<Vec<bool>, u64> = HashMap::new();
        for x in 0..self.levels.space.size() {
            let sig: Vec<bool> = chosen.iter().map(|&c| self.cand_sets[c].contains(x)).collect();
            *atoms.entry(sig).or_default() |= 1u64 << (self.level_of[x] % 64);
        }
        atoms.values().all(|mask| {
            let distinct = mask.count_ones();
            // ⌈log₂ distinct⌉ ≤ left
            distinct <= 1 || left >= 64 || (distinct as u64) <= (1u64 << left)
        })
    }

    fn check_leaf(&mut self, chosen: &[usize]) -> Leaf {
        let mut own = RowSpace::default();
        for &c in chosen {
            own.insert(&self.cand_sets[c]);
        }
        let mut with_levels = own.clone();
        for (_, s) in &self.levels.sets {
            with_levels.insert(s);
        }
        if !own.overflow && !with_levels.overflow && with_levels.rank() > own.rank() {
            return Leaf::None;
        }
        self.stats.closure_checks += 1;
        let rects: Vec<ConfigSet> = chosen.iter().map(|&c| self.cand_sets[c].clone()).collect();
        let targets: Vec<ConfigSet> = self.levels.sets.iter().map(|(_, s)| s.clone()).collect();
        match generate_all(&targets, &rects, self.budget.max_closure) {
            ClosureOutcome::Found(w) => Leaf::Feasible(chosen.to_vec(), w),
            ClosureOutcome::Exhausted => Leaf::None,
            ClosureOutcome::CapHit(_) => {
                self.stats.closure_unknown += 1;
                self.unknown_at_size = true;
                Leaf::None
            }
        }
    }
}

/// Greedy feasible base: each level set split into disjoint rectangles,
/// largest first, joined by ⊕. Used as the fallback when the search budget
/// runs out.
pub fn greedy_base(levels: &LevelSets, candidates: &[Hyperrectangle]) -> Result<Base> {
    let space = &levels.space;
    let cand_sets: Vec<ConfigSet> = candidates.iter().map(|r| r.to_set(space)).collect();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(cand_sets[i].len()));
    let mut rects = Vec::new();
    let mut exprs = BTreeMap::new();
    for (state, level) in &levels.sets {
        let mut rest = level.clone();
        let mut expr: Option<Expression> = None;
        while !rest.is_empty() {
            let pick = order
                .iter()
                .copied()
                .find(|&i| cand_sets[i].is_subset(&rest))
                .ok_or_else(|| Error::ShapeMismatch("candidate list lacks single points".into()))?;
            rest = rest.difference(&cand_sets[pick]);
            rects.push(candidates[pick].clone());
            let leaf = Expression::Rect(rects.len() - 1);
            expr = Some(match expr {
                None => leaf,
                Some(e) => Expression::union(e, leaf),
            });
        }
        exprs.insert(*state, expr.expect("level sets are non-empty"));
    }
    Base::new(space.clone(), rects, exprs)
}

/// Smallest base of hyperrectangles generating every level set of `d`.
pub fn solve_mbh(d: &DeterministicFunction, budget: &SearchBudget) -> Result<MbhSolution> {
    budget.validate()?;
    let started = Instant::now();
    let levels = target_sets(d);
    let candidates = enumerate_rectangles(d.parent_cards(), budget)?;
    let space = levels.space.clone();
    let cand_sets: Vec<ConfigSet> = candidates.iter().map(|r| r.to_set(&space)).collect();
    let mut suffix_union = vec![ConfigSet::empty(space.size()); cand_sets.len() + 1];
    for i in (0..cand_sets.len()).rev() {
        suffix_union[i] = suffix_union[i + 1].union(&cand_sets[i]);
    }
    let mut level_of = vec![0; space.size()];
    for (pos, (_, s)) in levels.sets.iter().enumerate() {
        for x in s.iter() {
            level_of[x] = pos;
        }
    }
    let lower_bound = levels.len();
    let fallback = greedy_base(&levels, &candidates)?;
    let upper = fallback.len().min(budget.max_base_size);

    let mut search = Search {
        levels: &levels,
        level_of,
        cand_sets,
        suffix_union,
        budget,
        deadline: started + budget.time_limit,
        stats: SearchStats {
            rectangles_enumerated: candidates.len(),
            ..SearchStats::default()
        },
        unknown_at_size: false,
        halted: None,
    };
    let mut proved = true;
    for k in lower_bound..=upper {
        search.unknown_at_size = false;
        let outcome = search.run(k);
        if search.halted.is_some() {
            break;
        }
        match outcome {
            Leaf::Feasible(chosen, witnesses) => {
                let rects: Vec<Hyperrectangle> = chosen.iter().map(|&c| candidates[c].clone()).collect();
                let exprs = levels.sets.iter().map(|(state, _)| *state).zip(witnesses).collect();
                return Ok(MbhSolution {
                    base: Base::new(space, rects, exprs)?,
                    optimal: proved,
                    lower_bound,
                    stats: search.stats,
                });
            }
            Leaf::None => {
                if search.unknown_at_size {
                    proved = false;
                } else if proved {
                    search.stats.exhausted_up_to = k;
                }
            }
        }
    }

    let best = MbhSolution {
        optimal: false,
        lower_bound,
        base: fallback,
        stats: search.stats.clone(),
    };
    let reason = match search.halted {
        Some(Halt::Time) => format!("time limit of {:?} reached", budget.time_limit),
        Some(Halt::Nodes) => format!("node limit of {} reached", budget.max_nodes),
        None if upper < best.base.len() => format!("base size limit {} reached", budget.max_base_size),
        None => "closure cap left some candidate bases undecided".to_string(),
    };
    Err(Error::SearchExhausted {
        reason,
        size: best.base.len(),
        best: Box::new(best),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn add(cards: &[usize]) -> DeterministicFunction {
        let parents: Vec<(usize, usize)> = cards.iter().copied().enumerate().collect();
        let top: usize = cards.iter().map(|c| c - 1).sum();
        DeterministicFunction::from_fn(&parents, (cards.len(), top + 1), |x| x.iter().sum()).unwrap()
    }

    #[test]
    fn add_level_set_sizes() {
        assert_eq!(target_sets(&add(&[3, 3])).sizes(), vec![1, 2, 3, 2, 1]);
    }

    #[test]
    fn constant_function_has_one_level() {
        let d = DeterministicFunction::from_fn(&[(0, 2), (1, 3)], (2, 2), |_| 1).unwrap();
        let l = target_sets(&d);
        assert_eq!(l.len(), 1);
        assert_eq!(l.sets[0].0, 1);
        assert_eq!(l.sets[0].1.len(), 6);
    }

    #[test]
    fn candidate_counts() {
        let b = SearchBudget::default();
        assert_eq!(enumerate_rectangles(&[3, 3], &b).unwrap().len(), 49);
        let one = enumerate_rectangles(&[2], &b).unwrap();
        assert_eq!(one.iter().map(|r| r.dims()[0]).collect::<Vec<_>>(), vec![1, 2, 3]);
        let small = SearchBudget {
            max_candidates: 10_000,
            ..b
        };
        match enumerate_rectangles(&[4, 4, 4, 4], &small) {
            Err(Error::BudgetExceeded { count, .. }) => assert_eq!(count, 50_625),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn enumeration_is_sorted_and_distinct() {
        let rects = enumerate_rectangles(&[3, 2], &SearchBudget::default()).unwrap();
        assert!(rects.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn single_full_rectangle_generates_nothing_else() {
        let space = Space::new(vec![2, 2]);
        let full = space.full_set();
        let target = ConfigSet::from_indices(4, [space.index_of(&[0, 1])]);
        let b = SearchBudget::default();
        assert_eq!(can_generate(&target, std::slice::from_ref(&full), &b).unwrap(), None);
        assert_eq!(
            can_generate(&full, std::slice::from_ref(&full), &b).unwrap(),
            Some(Expression::Rect(0))
        );
    }

    #[test]
    fn closure_cap_is_an_error() {
        let sets: Vec<ConfigSet> = (0..6).map(|i| ConfigSet::from_indices(6, [i])).collect();
        let target = ConfigSet::full(6);
        let b = SearchBudget {
            max_closure: 8,
            ..SearchBudget::default()
        };
        assert!(matches!(
            can_generate(&target, &sets, &b),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn row_space_rank() {
        let mut rs = RowSpace::default();
        rs.insert(&ConfigSet::from_indices(4, [0, 1]));
        rs.insert(&ConfigSet::from_indices(4, [1, 2]));
        rs.insert(&ConfigSet::from_indices(4, [0, 2]));
        assert_eq!(rs.rank(), 3);
        // {0,1} - {1,2} + {2} ... {0} = ({0,1} + {0,2} - {1,2}) / 2: rational span
        rs.insert(&ConfigSet::from_indices(4, [0]));
        assert_eq!(rs.rank(), 3);
        rs.insert(&ConfigSet::from_indices(4, [3]));
        assert_eq!(rs.rank(), 4);
    }

    #[test]
    fn add_2x2_minimal_base() {
        let d = add(&[2, 2]);
        let sol = solve_mbh(&d, &SearchBudget::default()).unwrap();
        assert_eq!(sol.base.len(), 3);
        assert!(sol.optimal);
        assert_eq!(sol.lower_bound, 3);
    }

    #[test]
    fn max_reaches_the_nested_bound() {
        let d = DeterministicFunction::from_fn(&[(0, 3), (1, 3)], (2, 3), |x| x[0].max(x[1])).unwrap();
        let sol = solve_mbh(&d, &SearchBudget::default()).unwrap();
        assert_eq!(sol.base.len(), 3);
        assert!(sol.optimal);
    }

    #[test]
    fn tiny_time_limit_returns_greedy_fallback() {
        let d = add(&[3, 3, 3]);
        let b = SearchBudget {
            time_limit: Duration::from_nanos(1),
            ..SearchBudget::default()
        };
        match solve_mbh(&d, &b) {
            Err(Error::SearchExhausted { best, .. }) => {
                assert!(!best.optimal);
                assert_eq!(best.base.expressions().len(), 7);
            }
            Ok(sol) => assert!(sol.base.len() >= 7),
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}
