use std::collections::BTreeSet;

use serde::Serialize;

use crate::network::Network;
use crate::VarId;

/// Undirected graph over dense variable ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<BTreeSet<VarId>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            adj: vec![BTreeSet::new(); n],
        }
    }

    /// Connects every pair within each scope.
    pub fn from_domains(n: usize, domains: &[Vec<VarId>]) -> Self {
        let mut g = Graph::new(n);
        for d in domains {
            g.connect_all(d);
        }
        g
    }

    pub fn add_edge(&mut self, a: VarId, b: VarId) {
        if a != b {
            self.adj[a].insert(b);
            self.adj[b].insert(a);
        }
    }

    fn connect_all(&mut self, vars: &[VarId]) {
        for (i, &a) in vars.iter().enumerate() {
            for &b in &vars[i + 1..] {
                self.add_edge(a, b);
            }
        }
    }

    pub fn neighbors(&self, v: VarId) -> &BTreeSet<VarId> {
        &self.adj[v]
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    fn fill_in(&self, v: VarId) -> usize {
        let nb: Vec<VarId> = self.adj[v].iter().copied().collect();
        let mut missing = 0;
        for (i, &a) in nb.iter().enumerate() {
            missing += nb[i + 1..].iter().filter(|b| !self.adj[a].contains(b)).count();
        }
        missing
    }

    /// Removes `v`, connecting its neighbours; returns the eliminated clique.
    fn eliminate(&mut self, v: VarId) -> Vec<VarId> {
        let nb: Vec<VarId> = std::mem::take(&mut self.adj[v]).into_iter().collect();
        for &a in &nb {
            self.adj[a].remove(&v);
        }
        self.connect_all(&nb);
        let mut clique = nb;
        clique.push(v);
        clique.sort_unstable();
        clique
    }
}

/// Moral graph: every potential's scope becomes a clique.
pub fn moral_graph(net: &Network) -> Graph {
    Graph::from_domains(net.len(), &net.domains())
}

/// Min-fill elimination order over `targets`, ties broken by lowest id.
/// Returns the order and the clique created at each step.
pub fn min_fill(graph: &Graph, targets: &[VarId]) -> (Vec<VarId>, Vec<Vec<VarId>>) {
    let mut g = graph.clone();
    let mut left: BTreeSet<VarId> = targets.iter().copied().collect();
    let mut order = Vec::with_capacity(left.len());
    let mut cliques = Vec::with_capacity(left.len());
    while let Some(v) = left.iter().copied().min_by_key(|&v| (g.fill_in(v), v)) {
        left.remove(&v);
        order.push(v);
        cliques.push(g.eliminate(v));
    }
    (order, cliques)
}

/// Cliques of a triangulated moral graph and their table sizes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CliqueReport {
    pub cliques: Vec<Vec<VarId>>,
    pub sizes: Vec<u128>,
    pub total: u128,
    pub order: Vec<VarId>,
}

impl CliqueReport {
    /// Keeps only maximal cliques (first occurrence order) and sizes them.
    pub fn from_cliques(candidates: Vec<Vec<VarId>>, cards: &[usize], order: Vec<VarId>) -> Self {
        let sets: Vec<BTreeSet<VarId>> = candidates.iter().map(|c| c.iter().copied().collect()).collect();
        let mut cliques: Vec<Vec<VarId>> = Vec::new();
        for (i, c) in sets.iter().enumerate() {
            let dominated = sets
                .iter()
                .enumerate()
                .any(|(j, o)| (c.len() < o.len() && c.is_subset(o)) || (j < i && c == o));
            if !dominated {
                cliques.push(c.iter().copied().collect());
            }
        }
        let sizes: Vec<u128> = cliques
            .iter()
            .map(|c| c.iter().map(|&v| cards[v] as u128).product())
            .collect();
        CliqueReport {
            total: sizes.iter().sum(),
            cliques,
            sizes,
            order,
        }
    }

    pub fn max_clique_size(&self) -> u128 {
        self.sizes.iter().copied().max().unwrap_or(0)
    }
}

pub fn total_clique_size(report: &CliqueReport) -> u128 {
    report.sizes.iter().sum()
}

pub fn moralize_and_triangulate(net: &Network) -> CliqueReport {
    let graph = moral_graph(net);
    let all: Vec<VarId> = (0..net.len()).collect();
    let (order, cliques) = min_fill(&graph, &all);
    let cards: Vec<usize> = (0..net.len()).map(|v| net.card(v)).collect();
    CliqueReport::from_cliques(cliques, &cards, order)
}
