//! Seeded adaptive-testing benchmark: a student model of skills and
//! misconceptions, task evidence models attached one at a time, and the
//! total clique size of each transformation method per number of tasks.

use std::fmt::Write as _;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::infer::{divorce_network, factorize_network, moralize_and_triangulate};
use crate::mbh::SearchBudget;
use crate::network::{Network, NetworkBuilder};
use crate::VarId;

pub const CANONICAL_SEED: u64 = 0;
pub const DEFAULT_GUESS: f64 = 0.2;
pub const DEFAULT_SLIP: f64 = 0.1;
/// Largest task count for which every ordering is enumerated.
pub const MAX_ALL_ORDERINGS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct StudentModelSpec {
    pub seed: u64,
    pub skills: usize,
    pub misconceptions: usize,
    pub max_in_degree: usize,
    /// Chance of drawing each parent beyond the first.
    pub extra_parent_prob: f64,
}

impl Default for StudentModelSpec {
    fn default() -> Self {
        StudentModelSpec {
            seed: CANONICAL_SEED,
            skills: 15,
            misconceptions: 6,
            max_in_degree: 3,
            extra_parent_prob: 0.2,
        }
    }
}

/// Binary DAG `S1..Sk, M1..Mm` in that id order. Every node after the first
/// takes one parent among earlier nodes, so the graph is a connected tree,
/// plus further distinct earlier parents up to `max_in_degree`, each with
/// probability `extra_parent_prob`. Each CPT row has P(state 1) uniform in
/// [0.1, 0.9].
pub fn generate_student_model(spec: &StudentModelSpec) -> Result<Network> {
    let total = spec.skills + spec.misconceptions;
    if spec.skills == 0 || spec.max_in_degree == 0 || !(0.0..=1.0).contains(&spec.extra_parent_prob) {
        return Err(Error::InvalidNetwork(
            "student model needs at least one skill and a positive in-degree bound".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut b = NetworkBuilder::new();
    for i in 0..total {
        let name = if i < spec.skills {
            format!("S{}", i + 1)
        } else {
            format!("M{}", i - spec.skills + 1)
        };
        let v = b.add_variable(name, 2);
        let mut parents: Vec<VarId> = if i == 0 {
            Vec::new()
        } else {
            let mut k = 1;
            while k < spec.max_in_degree.min(i) && rng.gen_bool(spec.extra_parent_prob) {
                k += 1;
            }
            (0..i)
                .collect::<Vec<_>>()
                .choose_multiple(&mut rng, k)
                .copied()
                .collect()
        };
        parents.sort_unstable();
        let table = (0..1usize << parents.len())
            .flat_map(|_| {
                let p: f64 = rng.gen_range(0.1..=0.9);
                [1.0 - p, p]
            })
            .collect();
        b.add_cpt(v, parents, table);
    }
    b.build()
}

/// Evidence model of one task: Y ⇔ conjunction of the required skills and
/// the negated misconception; T observes Y through guess and slip.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub skills: Vec<VarId>,
    pub misconception: Option<VarId>,
    /// P(T = 1 | Y = 0).
    pub guess: f64,
    /// P(T = 0 | Y = 1).
    pub slip: f64,
}

impl TaskSpec {
    fn validate(&self, student: &NetworkBuilder) -> Result<()> {
        if self.skills.is_empty() {
            return Err(Error::InvalidNetwork("a task needs at least one skill".into()));
        }
        if !(0.0..=1.0).contains(&self.guess) || !(0.0..=1.0).contains(&self.slip) {
            return Err(Error::InvalidNetwork("guess and slip must lie in [0, 1]".into()));
        }
        for &v in self.skills.iter().chain(&self.misconception) {
            if v >= student.len() {
                return Err(Error::UnknownVariable(v.to_string()));
            }
        }
        Ok(())
    }

    pub fn formula(&self, names: impl Fn(VarId) -> String) -> String {
        self.skills
            .iter()
            .map(|&s| names(s))
            .chain(self.misconception.map(|m| format!("!{}", names(m))))
            .join(" & ")
    }
}

/// Adds `Y<label>` and `T<label>`; returns (Y, T).
pub fn attach_task(b: &mut NetworkBuilder, task: &TaskSpec, label: &str) -> Result<(VarId, VarId)> {
    task.validate(b)?;
    let parents: Vec<VarId> = task.skills.iter().copied().chain(task.misconception).collect();
    let expr = task.formula(|v| b.name(v).to_string());
    let y = b.add_variable(format!("Y{label}"), 2);
    b.add_formula(y, &parents, &expr)?;
    let t = b.add_variable(format!("T{label}"), 2);
    b.add_cpt(
        t,
        vec![y],
        vec![1.0 - task.guess, task.guess, task.slip, 1.0 - task.slip],
    );
    Ok((y, t))
}

/// Student model with one task attached.
pub fn generate_task_model(task: &TaskSpec, student: &Network) -> Result<Network> {
    let mut b = NetworkBuilder::from_network(student.clone());
    attach_task(&mut b, task, "1")?;
    b.build()
}

/// `count` tasks, each requiring 4 or 5 distinct skills and one misconception.
pub fn generate_tasks(seed: u64, count: usize, spec: &StudentModelSpec) -> Vec<TaskSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x7461_736b));
    let skills: Vec<VarId> = (0..spec.skills).collect();
    (0..count)
        .map(|_| {
            let k = rng.gen_range(4..=5).min(spec.skills);
            let mut chosen: Vec<VarId> = skills.choose_multiple(&mut rng, k).copied().collect();
            chosen.sort_unstable();
            let misconception = (spec.misconceptions > 0).then(|| spec.skills + rng.gen_range(0..spec.misconceptions));
            TaskSpec {
                skills: chosen,
                misconception,
                guess: DEFAULT_GUESS,
                slip: DEFAULT_SLIP,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Method {
    None,
    Divorce,
    Factorize,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::None, Method::Divorce, Method::Factorize];

    pub fn label(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Divorce => "divorce",
            Method::Factorize => "factorize",
        }
    }

    pub fn apply(self, net: &Network) -> Result<Network> {
        match self {
            Method::None => Ok(net.clone()),
            Method::Divorce => divorce_network(net),
            Method::Factorize => factorize_network(net, &SearchBudget::default()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orderings {
    All,
    /// That many seeded random permutations.
    Sample(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellStats {
    pub method: Method,
    pub r: usize,
    pub avg: f64,
    pub min: u128,
    pub max: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkReport {
    /// One row per (method, r), methods in [`Method::ALL`] order.
    pub cells: Vec<CellStats>,
    /// avg(NONE) / avg(method) per r, for divorce then factorize.
    pub ratios: Vec<(usize, f64, f64)>,
    pub orderings: usize,
    pub triangulations: usize,
}

impl BenchmarkReport {
    pub fn avg(&self, method: Method, r: usize) -> f64 {
        self.cell(method, r).avg
    }

    pub fn cell(&self, method: Method, r: usize) -> &CellStats {
        self.cells
            .iter()
            .find(|c| c.method == method && c.r == r)
            .expect("cell present for every method and r")
    }

    pub fn max_r(&self) -> usize {
        self.cells.iter().map(|c| c.r).max().unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,r,avg_total_clique_size,min,max\n");
        for c in &self.cells {
            writeln!(out, "{},{},{:.3},{},{}", c.method.label(), c.r, c.avg, c.min, c.max).unwrap();
        }
        out
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

fn task_orders(count: usize, orderings: Orderings, seed: u64) -> Result<Vec<Vec<usize>>> {
    match orderings {
        Orderings::All => {
            if count > MAX_ALL_ORDERINGS {
                return Err(Error::BudgetExceeded {
                    what: "task orderings".into(),
                    count: factorial(count),
                    limit: factorial(MAX_ALL_ORDERINGS),
                });
            }
            Ok((0..count).permutations(count).collect())
        }
        Orderings::Sample(m) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..m)
                .map(|_| {
                    let mut p: Vec<usize> = (0..count).collect();
                    p.shuffle(&mut rng);
                    p
                })
                .collect())
        }
    }
}

/// For every ordering and prefix length r, connects the first r tasks, applies
/// each method, triangulates and records the total clique size.
pub fn run_clique_benchmark(
    student: &Network,
    tasks: &[TaskSpec],
    orderings: Orderings,
    seed: u64,
) -> Result<BenchmarkReport> {
    let orders = task_orders(tasks.len(), orderings, seed)?;
    if orders.is_empty() {
        return Err(Error::InvalidNetwork("benchmark needs at least one ordering".into()));
    }
    let mut sizes: Vec<Vec<Vec<u128>>> = vec![vec![Vec::new(); tasks.len() + 1]; Method::ALL.len()];
    let mut triangulations = 0;
    for order in &orders {
        let mut b = NetworkBuilder::from_network(student.clone());
        for r in 0..=tasks.len() {
            if r > 0 {
                let t = order[r - 1];
                attach_task(&mut b, &tasks[t], &(t + 1).to_string())?;
            }
            let net = b.clone().build()?;
            for (m, method) in Method::ALL.iter().enumerate() {
                let report = moralize_and_triangulate(&method.apply(&net)?);
                sizes[m][r].push(report.total);
                triangulations += 1;
            }
        }
    }
    let mut cells = Vec::new();
    for (m, &method) in Method::ALL.iter().enumerate() {
        for (r, vals) in sizes[m].iter().enumerate() {
            cells.push(CellStats {
                method,
                r,
                avg: vals.iter().sum::<u128>() as f64 / vals.len() as f64,
                min: *vals.iter().min().unwrap(),
                max: *vals.iter().max().unwrap(),
            });
        }
    }
    let mut report = BenchmarkReport {
        cells,
        ratios: Vec::new(),
        orderings: orders.len(),
        triangulations,
    };
    report.ratios = (0..=tasks.len())
        .map(|r| {
            let none = report.avg(Method::None, r);
            (
                r,
                none / report.avg(Method::Divorce, r),
                none / report.avg(Method::Factorize, r),
            )
        })
        .collect();
    Ok(report)
}
