use crate::adversary::IndependentExpansion;
use crate::error::{Error, Result};
use crate::instance::OfflineInstance;
use crate::market::MarketSolution;
use crate::scalar::{Scalar, Tol};

use super::graph::IndifferenceGraph;
use super::step::{pick_step, StepMode};
use super::transfer::Transfer;
use super::{CisefOptions, Surgery};

/// Breaks every remaining clique of a CISEF equilibrium on an
/// independent-agent instance, leaving an empty indifference graph.
///
/// For a clique `K`, pick an item type `g` the clique holds on which every
/// member has its highest support value. For each member `i`, the type that
/// agrees with `g` outside `K`, gives `i` its highest value and every other
/// member its lowest, is held by someone outside `K`; `i` swaps a little of
/// `g` for it. Others in `K` do not consider the new item maximum
/// bang-per-buck, so their edges to `i` vanish. The swap partner's side is
/// spread evenly over the partner's clique so it keeps identical rows.
pub fn strongify_independent<S: Scalar>(
    instance: &OfflineInstance<S>,
    expansion: &IndependentExpansion,
    solution: &MarketSolution<S>,
    opts: &CisefOptions,
) -> Result<(MarketSolution<S>, IndifferenceGraph)> {
    for (i, support) in expansion.supports().iter().enumerate() {
        if support.len() < 2 {
            return Err(Error::Precondition(format!(
                "agent {i} has a single support value; strong envy-freeness needs at least two"
            )));
        }
    }
    if expansion.n() != instance.n() || expansion.m() != instance.m_full() {
        return Err(Error::Dimension(
            "instance does not come from this expansion".into(),
        ));
    }
    let mut surgery = Surgery::new(instance, solution.clone(), opts.clone())?;
    let cliques: Vec<Vec<usize>> = surgery
        .graph
        .components()
        .into_iter()
        .filter(|c| c.len() > 1)
        .collect();
    for clique in cliques {
        if !surgery.graph.is_clique(&clique) {
            return Err(Error::Precondition(format!(
                "component {clique:?} is not a clique; run the CISEF refinement first"
            )));
        }
        surgery.break_clique(expansion, &clique)?;
    }
    let (solution, graph, _, _) = surgery.into_parts();
    Ok((solution, graph))
}

impl<S: Scalar> Surgery<'_, S> {
    fn break_clique(&mut self, expansion: &IndependentExpansion, clique: &[usize]) -> Result<()> {
        let sol = &self.solution;
        let (n, m) = (sol.n(), sol.m());
        let held = Tol::new(1e-15);
        let top: Vec<usize> = expansion.supports().iter().map(|s| s.len() - 1).collect();
        let owner = clique[0];
        let g = (0..m)
            .find(|&k| {
                held.positive(sol.allocation.get(owner, k)) && {
                    let digits = expansion.digits(self.instance.kept()[k]);
                    clique.iter().all(|&i| digits[i] == top[i])
                }
            })
            .ok_or_else(|| {
                Error::Precondition(format!(
                    "clique {clique:?} holds no item that is top-valued by all its members"
                ))
            })?;
        let g_digits = expansion.digits(self.instance.kept()[g]);
        let components = self.graph.components();
        let share = S::one() / S::from_usize(clique.len());
        let mut unit = Transfer::zero(n, m);
        let mut affected = clique.to_vec();
        for &i in clique {
            let mut digits = g_digits.clone();
            for &a in clique {
                digits[a] = if a == i { top[a] } else { 0 };
            }
            let ty = expansion.type_index(&digits);
            let k = self.instance.item_of_type(ty).ok_or_else(|| {
                Error::Precondition(format!(
                    "swap item type {ty} for agent {i} is valued zero by everyone"
                ))
            })?;
            let partner = (0..n)
                .find(|a| !clique.contains(a) && held.positive(sol.allocation.get(*a, k)))
                .ok_or_else(|| {
                    Error::Precondition(format!("nobody outside {clique:?} holds item type {ty}"))
                })?;
            let group = components
                .iter()
                .find(|c| c.contains(&partner))
                .expect("components cover agents");
            let size = S::from_usize(group.len());
            let in_k = share.clone() / sol.prices[k].clone();
            let in_g = share.clone() / sol.prices[g].clone();
            unit.deltas[i][k] += in_k.clone();
            unit.deltas[i][g] -= in_g.clone();
            for &p in group {
                unit.deltas[p][k] -= in_k.clone() / size.clone();
                unit.deltas[p][g] += in_g.clone() / size.clone();
                if !affected.contains(&p) {
                    affected.push(p);
                }
            }
        }
        affected.sort_unstable();
        let b = pick_step(
            self.opts.step,
            &self.solution,
            self.instance,
            &unit,
            StepMode::Operation1,
            &affected,
            self.opts.eps_ind,
        )?;
        let targets: Vec<(usize, usize)> = clique
            .iter()
            .flat_map(|&a| {
                clique
                    .iter()
                    .filter(move |&&c| c != a)
                    .map(move |&c| (a, c))
            })
            .collect();
        self.apply("procedure3", affected, &unit, &b, &targets)?;
        Ok(())
    }
}
