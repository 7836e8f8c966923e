use serde::Serialize;

use crate::instance::{fractional_value, OfflineInstance};
use crate::market::MarketSolution;
use crate::scalar::{Scalar, Tol};

/// Absolute floor under the relative indifference tolerance.
pub const INDIFFERENCE_FLOOR: f64 = 1e-12;

/// Directed graph with an edge `i -> j` when agent `i` values `j`'s bundle as
/// much as its own.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndifferenceGraph {
    n: usize,
    adj: Vec<Vec<bool>>,
    /// Disagreements between the value test and the item-level test (equal
    /// budgets only).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl IndifferenceGraph {
    pub fn empty(n: usize) -> Self {
        IndifferenceGraph {
            n,
            adj: vec![vec![false; n]; n],
            diagnostics: Vec::new(),
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::empty(n);
        for &(i, j) in edges {
            g.insert(i, j);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i][j]
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        assert_ne!(i, j, "self-loop");
        self.adj[i][j] = true;
    }

    pub fn remove(&mut self, i: usize, j: usize) {
        self.adj[i][j] = false;
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.adj[i][j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().flatten().filter(|e| **e).count()
    }

    pub fn is_empty(&self) -> bool {
        self.edge_count() == 0
    }

    /// Every ordered pair of distinct members is an edge.
    pub fn is_clique(&self, members: &[usize]) -> bool {
        members
            .iter()
            .all(|&i| members.iter().all(|&j| i == j || self.adj[i][j]))
    }

    /// Weakly connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![start];
            label[start] = id;
            let mut members = Vec::new();
            while let Some(u) = stack.pop() {
                members.push(u);
                for v in 0..self.n {
                    if (self.adj[u][v] || self.adj[v][u]) && label[v] == usize::MAX {
                        label[v] = id;
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Edges kept from `self` that `raw` still has; returns (graph, removed,
    /// suppressed) where suppressed are edges `raw` has but `self` does not.
    pub(crate) fn intersect(
        &self,
        raw: &IndifferenceGraph,
    ) -> (IndifferenceGraph, Vec<(usize, usize)>, Vec<(usize, usize)>) {
        let mut next = self.clone();
        next.diagnostics = raw.diagnostics.clone();
        let mut removed = Vec::new();
        let mut suppressed = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                match (self.adj[i][j], raw.adj[i][j]) {
                    (true, false) => {
                        next.adj[i][j] = false;
                        removed.push((i, j));
                    }
                    (false, true) => suppressed.push((i, j)),
                    _ => {}
                }
            }
        }
        (next, removed, suppressed)
    }
}

/// `table[i][j] = v_i(X_j)`.
pub fn value_table<S: Scalar>(
    solution: &MarketSolution<S>,
    instance: &OfflineInstance<S>,
) -> Vec<Vec<S>> {
    let n = solution.n();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| fractional_value(i, solution.allocation.row(j), instance))
                .collect()
        })
        .collect()
}

/// Whether `v_i(X_i)` and `v_i(X_j)` are within the indifference tolerance.
pub fn indifferent<S: Scalar>(own: &S, other: &S, eps: f64) -> bool {
    let scale = S::max_of(own.abs(), S::from_f64_lossy(INDIFFERENCE_FLOOR));
    Tol::new(eps).negligible(&(own.clone() - other.clone()), &scale)
}

/// Whether item `k` is a maximum bang-per-buck item for agent `i`, judged
/// against the ratio `r_i` recorded in the solution.
pub fn is_mbb<S: Scalar>(
    solution: &MarketSolution<S>,
    instance: &OfflineInstance<S>,
    i: usize,
    k: usize,
    eps: f64,
) -> bool {
    let v = instance.value(i, k);
    let target = solution.mbb[i].clone() * solution.prices[k].clone();
    Tol::new(eps).eq(v, &target)
}

/// Indifference graph of the solution's allocation at relative tolerance
/// `eps`. With equal budgets every edge is also checked item by item: `i`
/// should be indifferent to `j` exactly when everything `j` holds is a
/// maximum bang-per-buck item for `i`.
pub fn build_indifference_graph<S: Scalar>(
    solution: &MarketSolution<S>,
    instance: &OfflineInstance<S>,
    eps: f64,
) -> IndifferenceGraph {
    let n = solution.n();
    let table = value_table(solution, instance);
    let mut graph = IndifferenceGraph::empty(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && indifferent(&table[i][i], &table[i][j], eps) {
                graph.insert(i, j);
            }
        }
    }
    let held = Tol::new(eps);
    for i in 0..n {
        for j in 0..n {
            if i == j || !held.eq(&solution.budgets[i], &solution.budgets[j]) {
                continue;
            }
            let item_level = (0..solution.m())
                .filter(|&k| held.positive(solution.allocation.get(j, k)))
                .all(|k| is_mbb(solution, instance, i, k, eps.max(1e-9)));
            if item_level != graph.has_edge(i, j) {
                graph.diagnostics.push(format!(
                    "pair ({i},{j}): value test says {}, item test says {}",
                    graph.has_edge(i, j),
                    item_level
                ));
            }
        }
    }
    graph
}

/// Disjoint cliques covering all agents, with the allocation row members share.
#[derive(Clone, Debug, PartialEq)]
pub struct CliquePartition<S = f64> {
    pub cliques: Vec<Vec<usize>>,
    pub rows: Vec<Vec<S>>,
}

impl<S: Scalar> CliquePartition<S> {
    /// Each component of the graph becomes one part; the shared row is the
    /// members' average.
    pub fn from_components(graph: &IndifferenceGraph, solution: &MarketSolution<S>) -> Self {
        let cliques = graph.components();
        let rows = cliques.iter().map(|c| average_row(solution, c)).collect();
        CliquePartition { cliques, rows }
    }

    pub fn singletons(solution: &MarketSolution<S>) -> Self {
        let cliques: Vec<Vec<usize>> = (0..solution.n()).map(|i| vec![i]).collect();
        let rows = cliques.iter().map(|c| average_row(solution, c)).collect();
        CliquePartition { cliques, rows }
    }

    /// Index of the part containing `agent`.
    pub fn clique_of(&self, agent: usize) -> usize {
        self.cliques
            .iter()
            .position(|c| c.contains(&agent))
            .expect("partition covers every agent")
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn to_f64(&self) -> CliquePartition<f64> {
        CliquePartition {
            cliques: self.cliques.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(Scalar::to_f64).collect())
                .collect(),
        }
    }
}

pub(crate) fn average_row<S: Scalar>(solution: &MarketSolution<S>, members: &[usize]) -> Vec<S> {
    let k = S::from_usize(members.len());
    (0..solution.m())
        .map(|j| {
            members
                .iter()
                .map(|&i| solution.allocation.get(i, j).clone())
                .sum::<S>()
                / k.clone()
        })
        .collect()
}
