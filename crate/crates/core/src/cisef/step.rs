use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::OfflineInstance;
use crate::market::MarketSolution;
use crate::scalar::Scalar;

use super::graph::{indifferent, value_table, INDIFFERENCE_FLOOR};
use super::transfer::Transfer;

/// How the surgery sizes a transfer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Half of the worst-case bound from the largest bang-per-buck.
    Conservative,
    /// The feasible size that leaves the smallest remaining relative envy
    /// gap as large as possible. Gaps move linearly in the size, so this is
    /// a small piecewise-linear maximization.
    #[default]
    MaxMin,
}

/// Which bound applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// Transfers around a cycle: own values stay put, only `v_i(X_j)` for `j`
    /// on the cycle moves.
    Operation1,
    /// Budget changes inside a component: both sides of a gap may move.
    BudgetShift,
}

/// Worst-case step size. With `c` the largest bang-per-buck of anybody, a
/// transfer of `b` worth moves any bundle value by at most `b * c`, so
///
/// * cycles use half of `min gap_ij / c` over agents `i` and cycle members `j`;
/// * budget shifts use half of `min gap_ij / (2c)` over pairs touching the
///   component, further capped by the component's total budget.
///
/// Only strictly positive gaps (beyond the indifference tolerance) count. The
/// result never exceeds `cap`. When no gap qualifies the cap alone is
/// returned.
pub fn choose_step_size<S: Scalar>(
    solution: &MarketSolution<S>,
    instance: &OfflineInstance<S>,
    mode: StepMode,
    members: &[usize],
    cap: Option<S>,
    eps_ind: f64,
) -> Result<S> {
    let n = solution.n();
    let c = solution
        .max_bang_per_buck(instance)
        .into_iter()
        .fold(S::zero(), S::max_of);
    if !c.is_positive() {
        return Err(Error::Precondition(
            "largest bang-per-buck is not positive".into(),
        ));
    }
    let table = value_table(solution, instance);
    let in_set = |a: usize| members.contains(&a);
    let (divisor, cap) = match mode {
        StepMode::Operation1 => (c, cap),
        StepMode::BudgetShift => {
            let e_s: S = members.iter().map(|&i| solution.budgets[i].clone()).sum();
            let cap = Some(match cap {
                Some(cap) => S::min_of(cap, e_s),
                None => e_s,
            });
            (S::from_usize(2) * c, cap)
        }
    };
    let mut bound: Option<S> = None;
    for i in 0..n {
        for j in 0..n {
            let relevant = match mode {
                StepMode::Operation1 => in_set(j),
                StepMode::BudgetShift => in_set(i) || in_set(j),
            };
            if i == j || !relevant {
                continue;
            }
            let gap = table[i][i].clone() - table[i][j].clone();
            if !gap.is_positive() || indifferent(&table[i][i], &table[i][j], eps_ind) {
                continue;
            }
            let b = gap / divisor.clone();
            bound = Some(match bound {
                None => b,
                Some(old) => S::min_of(old, b),
            });
        }
    }
    let half = bound.map(|b| b / S::from_usize(2));
    match (half, cap) {
        (Some(h), Some(c)) => Ok(S::min_of(h, c)),
        (Some(h), None) => Ok(h),
        (None, Some(c)) => Ok(c),
        (None, None) => Err(Error::Precondition(
            "no gap and no feasibility cap bounds the step".into(),
        )),
    }
}

struct Line<S> {
    at_zero: S,
    slope: S,
}

/// Step size under `rule` for `unit`, the transfer of one unit of size.
pub(crate) fn pick_step<S: Scalar>(
    rule: StepRule,
    solution: &MarketSolution<S>,
    instance: &OfflineInstance<S>,
    unit: &Transfer<S>,
    mode: StepMode,
    members: &[usize],
    eps_ind: f64,
) -> Result<S> {
    let cap = unit.cap(solution);
    match rule {
        StepRule::Conservative => choose_step_size(solution, instance, mode, members, cap, eps_ind),
        StepRule::MaxMin => {
            let cap = match (cap, mode) {
                (Some(c), _) => c,
                (None, _) => {
                    return choose_step_size(solution, instance, mode, members, None, eps_ind)
                }
            };
            let b = max_min_step(solution, instance, unit, &cap, eps_ind);
            match b {
                Some(b) => Ok(b),
                None => choose_step_size(solution, instance, mode, members, Some(cap), eps_ind),
            }
        }
    }
}

/// Maximizes `min_ij (gap_ij + b * slope_ij) / v_i(X_i)` over `b in (0, cap]`.
/// Pairs that are indifferent and stay so are ignored. Among equally good
/// sizes the smallest wins. `None` if the optimum is not strictly positive.
fn max_min_step<S: Scalar>(
    solution: &MarketSolution<S>,
    instance: &OfflineInstance<S>,
    unit: &Transfer<S>,
    cap: &S,
    eps_ind: f64,
) -> Option<S> {
    let n = solution.n();
    let table = value_table(solution, instance);
    let moved: Vec<Vec<S>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| crate::instance::dot(&instance.values()[i], &unit.deltas[j]))
                .collect()
        })
        .collect();
    let floor = S::from_f64_lossy(INDIFFERENCE_FLOOR);
    let mut lines = Vec::new();
    for i in 0..n {
        let scale = S::max_of(table[i][i].clone(), floor.clone());
        for j in 0..n {
            if i == j {
                continue;
            }
            let gap = table[i][i].clone() - table[i][j].clone();
            let mut slope = (moved[i][i].clone() - moved[i][j].clone()) / scale.clone();
            if !S::EXACT && (slope.to_f64() * cap.to_f64()).abs() <= 1e-13 {
                slope = S::zero();
            }
            let at_zero = gap / scale.clone();
            if indifferent(&table[i][i], &table[i][j], eps_ind) {
                if !slope.is_positive() {
                    continue;
                }
                // the edge being removed starts from zero
                lines.push(Line {
                    at_zero: S::zero(),
                    slope,
                });
            } else {
                lines.push(Line { at_zero, slope });
            }
        }
    }
    if lines.is_empty() {
        return Some(cap.clone());
    }
    let envelope = |b: &S| -> S {
        lines
            .iter()
            .map(|l| l.at_zero.clone() + b.clone() * l.slope.clone())
            .reduce(S::min_of)
            .expect("nonempty")
    };
    let mut candidates = vec![cap.clone()];
    for a in &lines {
        for c in &lines {
            if a.slope > c.slope {
                let t =
                    (c.at_zero.clone() - a.at_zero.clone()) / (a.slope.clone() - c.slope.clone());
                if t.is_positive() && t < *cap {
                    candidates.push(t);
                }
            }
        }
    }
    candidates.sort_by(|x, y| x.partial_cmp(y).expect("finite step candidates"));
    let mut best: Option<(S, S)> = None;
    for t in candidates {
        let score = envelope(&t);
        let better = match &best {
            None => true,
            Some((_, s)) => {
                if S::EXACT {
                    score > *s
                } else {
                    score.to_f64() > s.to_f64() + 1e-12 * s.to_f64().abs().max(1e-12)
                }
            }
        };
        if better {
            best = Some((t, score));
        }
    }
    let (t, score) = best?;
    score.is_positive().then_some(t)
}
