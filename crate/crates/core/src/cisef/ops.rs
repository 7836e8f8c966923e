use crate::error::{Error, Result};
use crate::scalar::{Scalar, Tol};

use super::graph::{is_mbb, IndifferenceGraph};
use super::step::{pick_step, StepMode};
use super::transfer::Transfer;
use super::Surgery;

/// Shortest simple cycle inside `component` whose vertex set is not a
/// clique, together with a position `t` such that the chord from the
/// cycle's `t-1`-th to its `t+1`-th vertex is missing.
///
/// Lengths are tried in increasing order; within a length, cycles are found
/// by depth-first search from each start vertex in ascending order, visiting
/// only larger vertices, so each cycle is met once with its smallest vertex
/// first.
pub fn shortest_non_clique_cycle(
    graph: &IndifferenceGraph,
    component: &[usize],
) -> Option<(Vec<usize>, usize)> {
    let mut members = component.to_vec();
    members.sort_unstable();
    for len in 3..=members.len() {
        for &start in &members {
            let mut path = vec![start];
            if let Some(found) = extend(graph, &members, &mut path, len) {
                return Some(found);
            }
        }
    }
    None
}

fn extend(
    graph: &IndifferenceGraph,
    members: &[usize],
    path: &mut Vec<usize>,
    len: usize,
) -> Option<(Vec<usize>, usize)> {
    let start = path[0];
    let last = *path.last().expect("path starts nonempty");
    if path.len() == len {
        if !graph.has_edge(last, start) {
            return None;
        }
        let missing = (0..len).find(|&t| {
            let prev = path[(t + len - 1) % len];
            let next = path[(t + 1) % len];
            !graph.has_edge(prev, next)
        })?;
        return Some((path.clone(), missing));
    }
    for &v in members {
        if v > start && !path.contains(&v) && graph.has_edge(last, v) {
            path.push(v);
            let found = extend(graph, members, path, len);
            path.pop();
            if found.is_some() {
                return found;
            }
        }
    }
    None
}

/// Starting from singletons, repeatedly merges the lowest-indexed clique with
/// the lowest-indexed clique it forms a clique with.
pub(crate) fn greedy_cliques(graph: &IndifferenceGraph, component: &[usize]) -> Vec<Vec<usize>> {
    let mut cliques: Vec<Vec<usize>> = component.iter().map(|&i| vec![i]).collect();
    cliques.sort();
    'merge: loop {
        for a in 0..cliques.len() {
            for b in a + 1..cliques.len() {
                let mut union = cliques[a].clone();
                union.extend_from_slice(&cliques[b]);
                if graph.is_clique(&union) {
                    union.sort_unstable();
                    cliques[a] = union;
                    cliques.remove(b);
                    continue 'merge;
                }
            }
        }
        break;
    }
    cliques
}

impl<S: Scalar> Surgery<'_, S> {
    /// Adds to `unit`: `taker` takes `worth` of `giver`'s bundle, spread over
    /// the giver's items in proportion to their value at prices, restricted
    /// to items that are maximum bang-per-buck for the taker.
    pub(super) fn take_proportional(
        &self,
        unit: &mut Transfer<S>,
        taker: usize,
        giver: usize,
        worth: &S,
    ) -> Result<()> {
        let sol = &self.solution;
        let held = Tol::new(1e-15);
        let items: Vec<usize> = (0..sol.m())
            .filter(|&k| held.positive(sol.allocation.get(giver, k)))
            .filter(|&k| is_mbb(sol, self.instance, taker, k, self.opts.eps_ind.max(1e-9)))
            .collect();
        let total: S = items
            .iter()
            .map(|&k| sol.prices[k].clone() * sol.allocation.get(giver, k).clone())
            .sum();
        if !total.is_positive() {
            return Err(Error::Precondition(format!(
                "agent {taker} has an edge to agent {giver} but none of its items is maximum bang-per-buck for {taker}"
            )));
        }
        for k in items {
            let units = sol.allocation.get(giver, k).clone() * worth.clone() / total.clone();
            unit.deltas[taker][k] += units.clone();
            unit.deltas[giver][k] -= units;
        }
        Ok(())
    }

    /// Eliminates non-clique cycles in increasing length until every cycle of
    /// the component spans a clique. Returns how many cycles were treated.
    pub fn operation1(&mut self, component: &[usize]) -> Result<usize> {
        let n = self.solution.n();
        let mut done = 0;
        while let Some((cycle, t)) = shortest_non_clique_cycle(&self.graph, component) {
            self.eliminate_cycle(&cycle, t)?;
            done += 1;
            if done > n * n {
                return Err(Error::Precondition(
                    "cycle elimination is not making progress".into(),
                ));
            }
        }
        Ok(done)
    }

    fn eliminate_cycle(&mut self, cycle: &[usize], t: usize) -> Result<()> {
        let k = cycle.len();
        let prev = cycle[(t + k - 1) % k];
        let mid = cycle[t];
        let next = cycle[(t + 1) % k];
        let sol = &self.solution;
        let r_prev = sol.mbb[prev].clone();
        let held = Tol::new(1e-15);
        // the item of `next` that `prev` likes least per unit of money
        let mut pick: Option<(usize, S)> = None;
        for l in 0..sol.m() {
            if !held.positive(sol.allocation.get(next, l))
                || is_mbb(sol, self.instance, prev, l, self.opts.eps_ind)
            {
                continue;
            }
            let score =
                self.instance.value(prev, l).clone() / (sol.prices[l].clone() * r_prev.clone());
            if pick.as_ref().is_none_or(|(_, s)| score < *s) {
                pick = Some((l, score));
            }
        }
        let Some((l, _)) = pick else {
            return Err(Error::Precondition(format!(
                "no edge {prev}->{next}, yet every item of agent {next} is maximum bang-per-buck for agent {prev}"
            )));
        };
        let (n, m) = (sol.n(), sol.m());
        let mut unit = Transfer::zero(n, m);
        let units = S::one() / sol.prices[l].clone();
        unit.deltas[mid][l] += units.clone();
        unit.deltas[next][l] -= units;
        for s in 0..k {
            if s != t {
                self.take_proportional(&mut unit, cycle[s], cycle[(s + 1) % k], &S::one())?;
            }
        }
        let b = pick_step(
            self.opts.step,
            &self.solution,
            self.instance,
            &unit,
            StepMode::Operation1,
            cycle,
            self.opts.eps_ind,
        )?;
        self.apply("operation1", cycle.to_vec(), &unit, &b, &[(prev, mid)])?;
        Ok(())
    }

    /// Merges cliques greedily and gives every member of a merged clique the
    /// clique's average row. Returns the cliques and whether any edge was
    /// lost (observers outside a clique who were indifferent to only some of
    /// its members lose those edges).
    pub fn operation2(&mut self, component: &[usize]) -> Result<(Vec<Vec<usize>>, bool)> {
        let cliques = greedy_cliques(&self.graph, component);
        let removed = self.rebalance(&cliques, "operation2")?;
        Ok((cliques, removed))
    }

    /// Sets every row in each group to the group's average. Returns whether
    /// any edge disappeared.
    pub(super) fn rebalance(&mut self, groups: &[Vec<usize>], op: &'static str) -> Result<bool> {
        let (n, m) = (self.solution.n(), self.solution.m());
        let mut unit = Transfer::zero(n, m);
        let mut moves = false;
        let dust = Tol::with_floor(1e-15, 1.0);
        for group in groups.iter().filter(|g| g.len() > 1) {
            let avg = super::graph::average_row(&self.solution, group);
            for &i in group {
                for k in 0..m {
                    let d = avg[k].clone() - self.solution.allocation.get(i, k).clone();
                    if !dust.negligible(&d, &S::one()) {
                        moves = true;
                    }
                    unit.deltas[i][k] = d;
                }
            }
        }
        if !moves {
            return Ok(false);
        }
        let agents: Vec<usize> = groups
            .iter()
            .filter(|g| g.len() > 1)
            .flatten()
            .copied()
            .collect();
        let removed = self.apply(op, agents, &unit, &S::one(), &[])?;
        Ok(!removed.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_triangle_without_chord() {
        // 0->1->2->0 plus 1->0; chord 2->1 missing
        let g = IndifferenceGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0), (1, 0)]);
        let (cycle, t) = shortest_non_clique_cycle(&g, &[0, 1, 2]).unwrap();
        assert_eq!(cycle, vec![0, 1, 2]);
        let k = cycle.len();
        assert!(!g.has_edge(cycle[(t + k - 1) % k], cycle[(t + 1) % k]));
    }

    #[test]
    fn two_overlapping_triangles_have_only_clique_cycles() {
        let mut edges = Vec::new();
        for tri in [[0, 1, 2], [2, 3, 4]] {
            for &a in &tri {
                for &b in &tri {
                    if a != b {
                        edges.push((a, b));
                    }
                }
            }
        }
        let g = IndifferenceGraph::from_edges(5, &edges);
        assert!(shortest_non_clique_cycle(&g, &[0, 1, 2, 3, 4]).is_none());
        let cliques = greedy_cliques(&g, &[0, 1, 2, 3, 4]);
        assert_eq!(cliques, vec![vec![0, 1, 2], vec![3, 4]]);
    }

    #[test]
    fn acyclic_graph_has_no_cycle() {
        let g = IndifferenceGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        assert!(shortest_non_clique_cycle(&g, &[0, 1, 2]).is_none());
    }
}
