//! Seeded network families used by the equivalence and clique-growth checks.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{DeterministicFunction, Network, NetworkBuilder};
use crate::{Evidence, VarId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomNetworkSpec {
    pub max_variables: usize,
    pub max_states: usize,
    pub max_deterministic_parents: usize,
    /// Parent bound for the ordinary CPT nodes.
    pub max_cpt_parents: usize,
}

impl Default for RandomNetworkSpec {
    fn default() -> Self {
        RandomNetworkSpec {
            max_variables: 8,
            max_states: 3,
            max_deterministic_parents: 4,
            max_cpt_parents: 2,
        }
    }
}

fn random_cpt(rng: &mut ChaCha8Rng, rows: usize, card: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(rows * card);
    for _ in 0..rows {
        let row: Vec<f64> = (0..card).map(|_| rng.gen_range(0.05..1.0)).collect();
        let z: f64 = row.iter().sum();
        table.extend(row.iter().map(|p| p / z));
    }
    table
}

fn pick_parents(rng: &mut ChaCha8Rng, before: usize, max: usize, min: usize) -> Vec<VarId> {
    let count = rng.gen_range(min.min(before)..=max.min(before));
    let mut ps = sample(rng, before, count).into_vec();
    ps.sort_unstable();
    ps
}

/// Network with between 2 and `max_variables` variables in topological id
/// order, each with 1 to `max_states` states. Exactly one non-root variable
/// is deterministic with a uniformly drawn output table over at least one
/// parent; every other variable has a random CPT.
pub fn random_network(seed: u64, spec: &RandomNetworkSpec) -> Result<Network> {
    if spec.max_variables < 2 || spec.max_states == 0 || spec.max_deterministic_parents == 0 {
        return Err(Error::InvalidNetwork(
            "random networks need two variables, one state and one deterministic parent".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=spec.max_variables);
    let det = rng.gen_range(1..n);
    let mut b = NetworkBuilder::new();
    for v in 0..n {
        let card = rng.gen_range(1..=spec.max_states);
        b.add_variable(format!("V{v}"), card);
    }
    for v in 0..n {
        if v == det {
            let parents = pick_parents(&mut rng, v, spec.max_deterministic_parents, 1);
            let ps: Vec<(VarId, usize)> = parents.iter().map(|&p| (p, b.card(p))).collect();
            let size: usize = ps.iter().map(|p| p.1).product();
            let card = b.card(v);
            let outputs = (0..size).map(|_| rng.gen_range(0..card)).collect();
            b.add_deterministic(DeterministicFunction::from_table(&ps, (v, card), outputs)?);
        } else {
            let parents = pick_parents(&mut rng, v, spec.max_cpt_parents, 0);
            let rows = parents.iter().map(|&p| b.card(p)).product();
            let table = random_cpt(&mut rng, rows, b.card(v));
            b.add_cpt(v, parents, table);
        }
    }
    b.build()
}

/// Observes each variable with probability `p`, drawing a 0/1 vector with
/// at least one 1.
pub fn random_evidence(net: &Network, seed: u64, p: f64) -> Evidence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = Evidence::new();
    for v in 0..net.len() {
        if !rng.gen_bool(p) {
            continue;
        }
        let card = net.card(v);
        let mut vector: Vec<u8> = (0..card).map(|_| rng.gen_range(0..=1)).collect();
        if vector.iter().all(|&x| x == 0) {
            vector[rng.gen_range(0..card)] = 1;
        }
        e.set(v, vector).expect("vector is non-empty 0/1");
    }
    e
}

/// Shared root `R` with `r` independent groups of `n` parents with `s`
/// states each, and one deterministic child per group computing the MAX of
/// its parents (OR when binary). `R` feeds the first parent of every group;
/// the remaining parents are roots.
pub fn star_family(r: usize, n: usize, s: usize) -> Result<Network> {
    if n == 0 || s == 0 {
        return Err(Error::InvalidNetwork(
            "star family needs at least one parent and one state".into(),
        ));
    }
    let mut b = NetworkBuilder::new();
    let root = b.add_variable("R", 2);
    b.add_cpt(root, vec![], vec![0.5, 0.5]);
    let uniform = vec![1.0 / s as f64; s];
    for j in 1..=r {
        let parents: Vec<VarId> = (1..=n).map(|i| b.add_variable(format!("X{j}_{i}"), s)).collect();
        for (i, &p) in parents.iter().enumerate() {
            if i == 0 {
                let z = (s * (s + 1) / 2) as f64;
                let skewed = (1..=s).map(|w| w as f64 / z);
                b.add_cpt(p, vec![root], uniform.iter().copied().chain(skewed).collect());
            } else {
                b.add_cpt(p, vec![], uniform.clone());
            }
        }
        let y = b.add_variable(format!("Y{j}"), s);
        b.add_function(y, &parents, |x| x.iter().copied().max().unwrap_or(0))?;
    }
    b.build()
}
