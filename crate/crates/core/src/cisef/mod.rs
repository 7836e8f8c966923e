//! Refinement of an equal-budget market equilibrium into a clique identical
//! strongly envy-free (CISEF) one by surgery on the indifference graph.
//!
//! Every step is a transfer of items along indifference edges, which keeps
//! prices fixed and leaves the allocation an equilibrium for shifted budgets.
//! Edges only ever disappear: the working graph is the intersection of all
//! graphs seen so far. When rounding makes a targeted edge survive a transfer
//! it is removed anyway and the event is marked in the trace.

mod graph;
mod ops;
mod shift;
mod step;
mod strong;
mod transfer;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::OfflineInstance;
use crate::market::{check_kkt, solve_eg, MarketSolution, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::scalar::{Scalar, Tol};

pub use graph::{
    build_indifference_graph, indifferent, is_mbb, value_table, CliquePartition, IndifferenceGraph,
    INDIFFERENCE_FLOOR,
};
pub use ops::shortest_non_clique_cycle;
pub use step::{choose_step_size, StepMode, StepRule};
pub use strong::strongify_independent;
pub use transfer::{apply_transfer, Transfer};

/// Tuning knobs of the surgery.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CisefOptions {
    /// Relative tolerance below which two bundle values count as equal.
    pub eps_ind: f64,
    /// Tolerance of the KKT check run after each transfer.
    pub kkt_tol: f64,
    /// Tolerance handed to the market solver.
    pub solver_tol: f64,
    pub max_iters: usize,
    pub step: StepRule,
    /// Re-check KKT and envy-freeness after every transfer.
    pub verify: bool,
}

impl Default for CisefOptions {
    fn default() -> Self {
        CisefOptions {
            eps_ind: 1e-7,
            kkt_tol: 1e-6,
            solver_tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            step: StepRule::MaxMin,
            verify: true,
        }
    }
}

/// One line of the surgery trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEvent {
    pub op: &'static str,
    pub agents: Vec<usize>,
    /// Transfer size (money moved per unit transfer).
    pub b: f64,
    pub removed: Vec<(usize, usize)>,
    /// Edges the transfer should have removed but rounding kept; removed anyway.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub forced: Vec<(usize, usize)>,
    /// Edges the raw graph shows that the working graph had already dropped.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub suppressed: Vec<(usize, usize)>,
    pub budget_deltas: Vec<f64>,
    pub edges_left: usize,
}

/// Result of [`compute_cisef`].
#[derive(Clone, Debug)]
pub struct CisefOutcome<S = f64> {
    /// The equal-budget equilibrium the surgery started from.
    pub initial: MarketSolution<S>,
    pub solution: MarketSolution<S>,
    pub partition: CliquePartition<S>,
    pub graph: IndifferenceGraph,
    pub trace: Vec<TraceEvent>,
    /// Operations that removed at least one edge.
    pub eliminations: usize,
}

/// Mutable state of a refinement run.
pub struct Surgery<'a, S: Scalar> {
    instance: &'a OfflineInstance<S>,
    solution: MarketSolution<S>,
    graph: IndifferenceGraph,
    opts: CisefOptions,
    trace: Vec<TraceEvent>,
    eliminations: usize,
}

impl<'a, S: Scalar> Surgery<'a, S> {
    pub fn new(
        instance: &'a OfflineInstance<S>,
        solution: MarketSolution<S>,
        opts: CisefOptions,
    ) -> Result<Self> {
        let report = check_kkt(&solution, instance, opts.kkt_tol)?;
        if !report.pass {
            return Err(Error::Precondition(format!(
                "starting point is not an equilibrium: {report}"
            )));
        }
        let graph = build_indifference_graph(&solution, instance, opts.eps_ind);
        Ok(Surgery {
            instance,
            solution,
            graph,
            opts,
            trace: Vec::new(),
            eliminations: 0,
        })
    }

    /// Resumes from a solution with an already-pruned graph.
    pub fn with_graph(
        instance: &'a OfflineInstance<S>,
        solution: MarketSolution<S>,
        graph: IndifferenceGraph,
        opts: CisefOptions,
    ) -> Result<Self> {
        let mut s = Self::new(instance, solution, opts)?;
        let (g, _, _) = graph.intersect(&s.graph);
        s.graph = g;
        Ok(s)
    }

    pub fn solution(&self) -> &MarketSolution<S> {
        &self.solution
    }

    pub fn graph(&self) -> &IndifferenceGraph {
        &self.graph
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn eliminations(&self) -> usize {
        self.eliminations
    }

    pub fn into_parts(self) -> (MarketSolution<S>, IndifferenceGraph, Vec<TraceEvent>, usize) {
        (self.solution, self.graph, self.trace, self.eliminations)
    }

    fn budget_tol(&self) -> Tol {
        Tol::new(1e-9)
    }

    /// Applies `b * unit`, re-derives the graph and records the step.
    /// `targets` are edges the step must remove.
    fn apply(
        &mut self,
        op: &'static str,
        agents: Vec<usize>,
        unit: &Transfer<S>,
        b: &S,
        targets: &[(usize, usize)],
    ) -> Result<Vec<(usize, usize)>> {
        let step = unit.scaled(b);
        let next = apply_transfer(
            &self.solution,
            self.instance,
            &step,
            self.opts.eps_ind.max(1e-9),
        )?;
        if self.opts.verify {
            let report = check_kkt(&next, self.instance, self.opts.kkt_tol)?;
            if !report.pass {
                return Err(Error::InvalidTransfer(format!(
                    "{op} broke the equilibrium: {report}"
                )));
            }
            let table = value_table(&next, self.instance);
            for i in 0..next.n() {
                for j in 0..next.n() {
                    let excess = table[i][j].clone() - table[i][i].clone();
                    if excess.is_positive()
                        && !Tol::new(self.opts.kkt_tol).negligible(&excess, &table[i][i])
                    {
                        return Err(Error::InvalidTransfer(format!(
                            "{op} made agent {i} envy agent {j}"
                        )));
                    }
                }
            }
        }
        self.solution = next;
        let raw = build_indifference_graph(&self.solution, self.instance, self.opts.eps_ind);
        let (mut graph, mut removed, suppressed) = self.graph.intersect(&raw);
        let mut forced = Vec::new();
        for &(i, j) in targets {
            if graph.has_edge(i, j) {
                graph.remove(i, j);
                forced.push((i, j));
                removed.push((i, j));
            }
        }
        removed.sort_unstable();
        self.graph = graph;
        if !removed.is_empty() {
            self.eliminations += 1;
        }
        self.trace.push(TraceEvent {
            op,
            agents,
            b: b.to_f64(),
            removed: removed.clone(),
            forced,
            suppressed,
            budget_deltas: step.budget_deltas.iter().map(Scalar::to_f64).collect(),
            edges_left: self.graph.edge_count(),
        });
        Ok(removed)
    }

    fn require_identical_budgets(&self, component: &[usize]) -> Result<()> {
        let e0 = &self.solution.budgets[component[0]];
        if let Some(&i) = component
            .iter()
            .find(|&&i| !self.budget_tol().eq(&self.solution.budgets[i], e0))
        {
            return Err(Error::Precondition(format!(
                "agents {} and {i} share a component but have budgets {e0} and {}",
                component[0], self.solution.budgets[i]
            )));
        }
        Ok(())
    }

    /// Alternates cycle elimination and merge-and-rebalance until the
    /// component's graph is clique acyclic with identical rows per clique.
    /// Returns the cliques.
    pub fn procedure1(&mut self, component: &[usize]) -> Result<Vec<Vec<usize>>> {
        let bound = self.solution.n() * self.solution.n() + 1;
        for _ in 0..bound {
            self.operation1(component)?;
            let (cliques, removed) = self.operation2(component)?;
            if !removed {
                return Ok(cliques);
            }
        }
        Err(Error::Precondition(
            "cycle elimination did not settle".into(),
        ))
    }

    /// Runs the full refinement on the current state.
    pub fn run(&mut self) -> Result<()> {
        let n = self.solution.n();
        let bound = n * n + 2;
        for _ in 0..bound {
            let before = self.graph.edge_count();
            for component in self.graph.components() {
                if component.len() > 1 {
                    self.require_identical_budgets(&component)?;
                    self.procedure1(&component)?;
                }
            }
            for component in self.graph.components() {
                if component.len() > 1 {
                    let cliques = ops::greedy_cliques(&self.graph, &component);
                    if cliques.len() > 1 {
                        self.budget_shift(&component, &cliques, None)?;
                    }
                }
            }
            if self.graph.edge_count() == before {
                break;
            }
        }
        for component in self.graph.components() {
            if component.len() > 1 && !self.graph.is_clique(&component) {
                return Err(Error::Precondition(format!(
                    "component {component:?} did not end as a clique"
                )));
            }
        }
        let components = self.graph.components();
        self.rebalance(&components, "final_rebalance")?;
        if self.eliminations > n * n - n {
            return Err(Error::Precondition(format!(
                "{} edge eliminations exceed the bound {}",
                self.eliminations,
                n * n - n
            )));
        }
        Ok(())
    }

    pub fn partition(&self) -> CliquePartition<S> {
        CliquePartition::from_components(&self.graph, &self.solution)
    }
}

/// Solves the equal-budget market and refines it into a CISEF equilibrium.
pub fn compute_cisef<S: Scalar>(
    instance: &OfflineInstance<S>,
    opts: &CisefOptions,
) -> Result<CisefOutcome<S>> {
    if !instance.equal_budgets(Tol::new(1e-12)) {
        return Err(Error::Precondition(
            "compute_cisef needs equal budgets".into(),
        ));
    }
    let initial = solve_eg(instance, opts.solver_tol, opts.max_iters)?;
    refine_to_cisef(instance, initial, opts)
}

/// Refines a given equal-budget equilibrium.
pub fn refine_to_cisef<S: Scalar>(
    instance: &OfflineInstance<S>,
    initial: MarketSolution<S>,
    opts: &CisefOptions,
) -> Result<CisefOutcome<S>> {
    let mut surgery = Surgery::new(instance, initial.clone(), opts.clone())?;
    surgery.run()?;
    let partition = surgery.partition();
    let (solution, graph, trace, eliminations) = surgery.into_parts();
    Ok(CisefOutcome {
        initial,
        solution,
        partition,
        graph,
        trace,
        eliminations,
    })
}

/// Runs cycle elimination on every component of `graph`.
pub fn operation1_eliminate_cycles<S: Scalar>(
    solution: &MarketSolution<S>,
    graph: &IndifferenceGraph,
    instance: &OfflineInstance<S>,
    opts: &CisefOptions,
) -> Result<(MarketSolution<S>, IndifferenceGraph)> {
    let mut s = Surgery::with_graph(instance, solution.clone(), graph.clone(), opts.clone())?;
    for component in s.graph.components() {
        if component.len() > 2 {
            s.require_identical_budgets(&component)?;
            s.operation1(&component)?;
        }
    }
    let (solution, graph, _, _) = s.into_parts();
    Ok((solution, graph))
}

/// Merges cliques greedily and averages rows within each, on every component.
pub fn operation2_merge_rebalance<S: Scalar>(
    solution: &MarketSolution<S>,
    graph: &IndifferenceGraph,
    instance: &OfflineInstance<S>,
    opts: &CisefOptions,
) -> Result<(MarketSolution<S>, IndifferenceGraph, CliquePartition<S>)> {
    let mut s = Surgery::with_graph(instance, solution.clone(), graph.clone(), opts.clone())?;
    let mut cliques = Vec::new();
    for component in s.graph.components() {
        let (mut c, _) = s.operation2(&component)?;
        cliques.append(&mut c);
    }
    cliques.sort();
    let rows = cliques
        .iter()
        .map(|c| graph::average_row(&s.solution, c))
        .collect();
    let (solution, graph, _, _) = s.into_parts();
    Ok((solution, graph, CliquePartition { cliques, rows }))
}

/// Shifts budget from a source clique to the sink cliques it reaches inside
/// `component`. `b = None` picks the size by the configured rule.
pub fn budget_shift<S: Scalar>(
    solution: &MarketSolution<S>,
    graph: &IndifferenceGraph,
    instance: &OfflineInstance<S>,
    component: &[usize],
    b: Option<S>,
    opts: &CisefOptions,
) -> Result<(MarketSolution<S>, IndifferenceGraph)> {
    let mut s = Surgery::with_graph(instance, solution.clone(), graph.clone(), opts.clone())?;
    let cliques = ops::greedy_cliques(&s.graph, component);
    s.budget_shift(component, &cliques, b)?;
    let (solution, graph, _, _) = s.into_parts();
    Ok((solution, graph))
}
