use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::step::{pick_step, StepMode};
use super::transfer::Transfer;
use super::Surgery;

impl<S: Scalar> Surgery<'_, S> {
    /// Moves budget from the lowest-indexed source clique of the clique DAG
    /// to the sink cliques it reaches. The unit flow is split evenly among
    /// the sinks, each share routed along one shortest agent path, then
    /// evened out inside the source clique and inside every sink clique so
    /// clique members keep identical budgets. Flow on `i -> j` means `i`
    /// takes that much money's worth of `j`'s bundle.
    pub fn budget_shift(
        &mut self,
        component: &[usize],
        cliques: &[Vec<usize>],
        b: Option<S>,
    ) -> Result<()> {
        let n = self.solution.n();
        let of: Vec<Option<usize>> = (0..n)
            .map(|a| cliques.iter().position(|c| c.contains(&a)))
            .collect();
        let q = cliques.len();
        let mut dag = vec![vec![false; q]; q];
        for &u in component {
            for &v in component {
                if let (Some(cu), Some(cv)) = (of[u], of[v]) {
                    if cu != cv && self.graph.has_edge(u, v) {
                        dag[cu][cv] = true;
                    }
                }
            }
        }
        if !dag.iter().flatten().any(|e| *e) {
            return Err(Error::Precondition(
                "component has no edge between cliques".into(),
            ));
        }
        if let Some(cycle) = find_cycle(&dag) {
            return Err(Error::Precondition(format!(
                "cliques {cycle:?} lie on a common cycle"
            )));
        }
        let source = (0..q)
            .find(|&c| !(0..q).any(|d| dag[d][c]) && dag[c].iter().any(|e| *e))
            .expect("a nonempty DAG has a source with an out-edge");
        let mut reach = vec![false; q];
        let mut queue = VecDeque::from([source]);
        reach[source] = true;
        while let Some(c) = queue.pop_front() {
            for d in 0..q {
                if dag[c][d] && !reach[d] {
                    reach[d] = true;
                    queue.push_back(d);
                }
            }
        }
        let sinks: Vec<usize> = (0..q)
            .filter(|&d| reach[d] && d != source && !dag[d].iter().any(|e| *e))
            .collect();

        let mut flow = vec![vec![S::zero(); n]; n];
        let mut inflow = vec![S::zero(); n];
        let mut outflow = vec![S::zero(); n];
        let share = S::one() / S::from_usize(sinks.len());
        for &d in &sinks {
            let path = self.agent_path(&cliques[source], &cliques[d], component);
            for w in path.windows(2) {
                flow[w[0]][w[1]] += share.clone();
            }
            inflow[path[0]] += share.clone();
            outflow[*path.last().expect("path is nonempty")] += share.clone();
        }
        balance(&mut flow, &cliques[source], &inflow, false);
        for &d in &sinks {
            balance(&mut flow, &cliques[d], &outflow, true);
        }
        for i in 0..n {
            for j in i + 1..n {
                let common = S::min_of(flow[i][j].clone(), flow[j][i].clone());
                if common.is_positive() {
                    flow[i][j] -= common.clone();
                    flow[j][i] -= common;
                }
            }
        }

        let mut unit = Transfer::zero(n, self.solution.m());
        for i in 0..n {
            for j in 0..n {
                if flow[i][j].is_positive() {
                    if !self.graph.has_edge(i, j) {
                        return Err(Error::Precondition(format!(
                            "flow on {i}->{j} without an indifference edge"
                        )));
                    }
                    let worth = flow[i][j].clone();
                    self.take_proportional(&mut unit, i, j, &worth)?;
                }
            }
        }
        let gain = S::one() / S::from_usize(cliques[source].len());
        for &i in &cliques[source] {
            unit.budget_deltas[i] = gain.clone();
        }
        for &d in &sinks {
            let loss = share.clone() / S::from_usize(cliques[d].len());
            for &i in &cliques[d] {
                unit.budget_deltas[i] = -loss.clone();
            }
        }
        let b = match b {
            Some(b) => b,
            None => pick_step(
                self.opts.step,
                &self.solution,
                self.instance,
                &unit,
                StepMode::BudgetShift,
                component,
                self.opts.eps_ind,
            )?,
        };
        // agents whose budgets now differ cannot stay indifferent
        let mut targets = Vec::new();
        for &i in component {
            for &j in component {
                if i != j
                    && self.graph.has_edge(i, j)
                    && unit.budget_deltas[i] != unit.budget_deltas[j]
                {
                    targets.push((i, j));
                }
            }
        }
        let removed = self.apply("budget_shift", component.to_vec(), &unit, &b, &targets)?;
        if removed.is_empty() {
            return Err(Error::Precondition("budget shift removed no edge".into()));
        }
        Ok(())
    }

    /// Shortest path in the working graph from any member of `from` to any
    /// member of `to`, staying inside `component`; ties go to lower indices.
    fn agent_path(&self, from: &[usize], to: &[usize], component: &[usize]) -> Vec<usize> {
        let n = self.solution.n();
        let mut parent = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for &s in from {
            parent[s] = s;
            queue.push_back(s);
        }
        while let Some(u) = queue.pop_front() {
            if to.contains(&u) {
                let mut path = vec![u];
                let mut v = u;
                while parent[v] != v {
                    v = parent[v];
                    path.push(v);
                }
                path.reverse();
                return path;
            }
            for &v in component {
                if parent[v] == usize::MAX && self.graph.has_edge(u, v) {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        unreachable!("sink clique was found reachable from the source clique")
    }
}

/// Evens out per-member flow inside a clique by moving flow along its
/// internal edges. `amount[i]` is the flow entering (source side) or leaving
/// (sink side) member `i` from outside.
fn balance<S: Scalar>(flow: &mut [Vec<S>], clique: &[usize], amount: &[S], sink: bool) {
    let k = S::from_usize(clique.len());
    for (a, &i) in clique.iter().enumerate() {
        for &j in &clique[a + 1..] {
            // flow i -> j means i takes from j
            let d = if sink {
                (amount[i].clone() - amount[j].clone()) / k.clone()
            } else {
                (amount[j].clone() - amount[i].clone()) / k.clone()
            };
            if d.is_positive() {
                flow[i][j] += d;
            } else if d < S::zero() {
                flow[j][i] += -d;
            }
        }
    }
}

fn find_cycle(dag: &[Vec<bool>]) -> Option<Vec<usize>> {
    let q = dag.len();
    // 0 = unseen, 1 = on stack, 2 = done
    let mut state = vec![0u8; q];
    fn visit(
        u: usize,
        dag: &[Vec<bool>],
        state: &mut [u8],
        stack: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        state[u] = 1;
        stack.push(u);
        for v in 0..dag.len() {
            if dag[u][v] {
                if state[v] == 1 {
                    let at = stack.iter().position(|&w| w == v).expect("on stack");
                    return Some(stack[at..].to_vec());
                }
                if state[v] == 0 {
                    if let Some(c) = visit(v, dag, state, stack) {
                        return Some(c);
                    }
                }
            }
        }
        stack.pop();
        state[u] = 2;
        None
    }
    for u in 0..q {
        if state[u] == 0 {
            let mut stack = Vec::new();
            if let Some(c) = visit(u, dag, &mut state, &mut stack) {
                return Some(c);
            }
        }
    }
    None
}
