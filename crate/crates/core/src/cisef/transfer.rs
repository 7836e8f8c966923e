use crate::error::{Error, Result};
use crate::instance::{dot, FractionalAllocation, OfflineInstance};
use crate::market::MarketSolution;
use crate::scalar::{Scalar, Tol};

use super::graph::is_mbb;

/// Share changes `deltas[i][k]` together with the implied budget changes
/// `budget_deltas[i] = sum_k p_k * deltas[i][k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transfer<S = f64> {
    pub deltas: Vec<Vec<S>>,
    pub budget_deltas: Vec<S>,
}

impl<S: Scalar> Transfer<S> {
    pub fn new(deltas: Vec<Vec<S>>, prices: &[S]) -> Self {
        let budget_deltas = deltas.iter().map(|row| dot(prices, row)).collect();
        Transfer {
            deltas,
            budget_deltas,
        }
    }

    pub fn zero(n: usize, m: usize) -> Self {
        Transfer {
            deltas: vec![vec![S::zero(); m]; n],
            budget_deltas: vec![S::zero(); n],
        }
    }

    /// The same transfer multiplied by `b`.
    pub fn scaled(&self, b: &S) -> Self {
        Transfer {
            deltas: self
                .deltas
                .iter()
                .map(|r| r.iter().map(|d| d.clone() * b.clone()).collect())
                .collect(),
            budget_deltas: self
                .budget_deltas
                .iter()
                .map(|d| d.clone() * b.clone())
                .collect(),
        }
    }

    /// Largest multiplier `b` keeping `X + b * deltas` nonnegative and every
    /// budget positive. `None` when nothing limits it.
    pub fn cap(&self, solution: &MarketSolution<S>) -> Option<S> {
        let mut cap: Option<S> = None;
        let mut tighten = |c: S| {
            cap = Some(match cap.take() {
                None => c,
                Some(old) => S::min_of(old, c),
            })
        };
        for (i, row) in self.deltas.iter().enumerate() {
            for (k, d) in row.iter().enumerate() {
                if *d < S::zero() {
                    tighten(solution.allocation.get(i, k).clone() / -d.clone());
                }
            }
            let db = &self.budget_deltas[i];
            if *db < S::zero() {
                tighten(solution.budgets[i].clone() / -db.clone());
            }
        }
        cap
    }
}

/// Moves items along `transfer`, keeping prices. Rejected before anything
/// changes if an item total moves, a share leaves `[0, 1]`, a budget becomes
/// nonpositive, or somebody gains an item that is not maximum bang-per-buck
/// for it (within `eps`).
pub fn apply_transfer<S: Scalar>(
    solution: &MarketSolution<S>,
    instance: &OfflineInstance<S>,
    transfer: &Transfer<S>,
    eps: f64,
) -> Result<MarketSolution<S>> {
    let (n, m) = (solution.n(), solution.m());
    if transfer.deltas.len() != n || transfer.deltas.iter().any(|r| r.len() != m) {
        return Err(Error::Dimension("transfer shape".into()));
    }
    let slack = Tol::with_floor(1e-12, 1.0);
    for k in 0..m {
        let col: S = transfer.deltas.iter().map(|r| r[k].clone()).sum();
        if !slack.negligible(&col, &S::one()) {
            return Err(Error::InvalidTransfer(format!(
                "item {k} total changes by {col}"
            )));
        }
    }
    let mut shares = solution.allocation.shares.clone();
    for i in 0..n {
        for k in 0..m {
            let d = &transfer.deltas[i][k];
            if d.is_zero() {
                continue;
            }
            if d.is_positive() && !S::EXACT && d.to_f64() <= 1e-15 {
                // rounding dust; accepted without an MBB check
            } else if d.is_positive() && !is_mbb(solution, instance, i, k, eps) {
                return Err(Error::InvalidTransfer(format!(
                    "agent {i} would gain item {k}, which is not a maximum bang-per-buck item for it"
                )));
            }
            let x = shares[i][k].clone() + d.clone();
            if x < S::zero() {
                if S::EXACT || x.to_f64() < -1e-12 {
                    return Err(Error::InvalidTransfer(format!(
                        "share x[{i}][{k}] would become {x}"
                    )));
                }
                shares[i][k] = S::zero();
            } else if x > S::one() {
                if S::EXACT || x.to_f64() > 1.0 + 1e-12 {
                    return Err(Error::InvalidTransfer(format!(
                        "share x[{i}][{k}] would become {x}"
                    )));
                }
                shares[i][k] = S::one();
            } else {
                shares[i][k] = x;
            }
        }
    }
    let budgets: Vec<S> = solution
        .budgets
        .iter()
        .zip(&transfer.budget_deltas)
        .map(|(e, d)| e.clone() + d.clone())
        .collect();
    if let Some(i) = budgets.iter().position(|e| !e.is_positive()) {
        return Err(Error::InvalidTransfer(format!(
            "budget of agent {i} would become {}",
            budgets[i]
        )));
    }
    MarketSolution::new(
        FractionalAllocation { shares },
        solution.prices.clone(),
        budgets,
        instance,
    )
}
