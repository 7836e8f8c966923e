//! Fisher-market equilibria of the Eisenberg-Gale program and their KKT
//! certificates.

mod polish;
mod proportional;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{fractional_value, FractionalAllocation, OfflineInstance};
use crate::scalar::{Scalar, Tol};

pub use polish::polish;
pub use proportional::{proportional_response, PrIterate};

/// Default stopping tolerance on the largest KKT residual.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default iteration budget for proportional response.
pub const DEFAULT_MAX_ITERS: usize = 200_000;

/// Allocation, prices and budgets, plus every agent's bang-per-buck ratio
/// `r_i = v_i(X_i) / e_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketSolution<S = f64> {
    pub allocation: FractionalAllocation<S>,
    pub prices: Vec<S>,
    pub budgets: Vec<S>,
    pub mbb: Vec<S>,
}

impl<S: Scalar> MarketSolution<S> {
    /// Assembles a solution and fills in `mbb` from the allocation.
    pub fn new(
        allocation: FractionalAllocation<S>,
        prices: Vec<S>,
        budgets: Vec<S>,
        instance: &OfflineInstance<S>,
    ) -> Result<Self> {
        let mut sol = MarketSolution {
            allocation,
            prices,
            budgets,
            mbb: Vec::new(),
        };
        sol.mbb = mbb_ratios(&sol, instance)?;
        Ok(sol)
    }

    pub fn n(&self) -> usize {
        self.budgets.len()
    }

    pub fn m(&self) -> usize {
        self.prices.len()
    }

    /// Value agent `i` has for agent `j`'s bundle.
    pub fn value_of(&self, instance: &OfflineInstance<S>, i: usize, j: usize) -> S {
        fractional_value(i, self.allocation.row(j), instance)
    }

    /// Money agent `i` spends.
    pub fn spend(&self, i: usize) -> S {
        crate::instance::dot(&self.prices, self.allocation.row(i))
    }

    /// Largest bang-per-buck `v_ij / p_j` of each agent.
    pub fn max_bang_per_buck(&self, instance: &OfflineInstance<S>) -> Vec<S> {
        (0..self.n())
            .map(|i| {
                instance.values()[i]
                    .iter()
                    .zip(&self.prices)
                    .map(|(v, p)| v.clone() / p.clone())
                    .fold(S::zero(), S::max_of)
            })
            .collect()
    }

    pub fn to_f64(&self) -> MarketSolution<f64> {
        MarketSolution {
            allocation: self.allocation.to_f64(),
            prices: self.prices.iter().map(Scalar::to_f64).collect(),
            budgets: self.budgets.iter().map(Scalar::to_f64).collect(),
            mbb: self.mbb.iter().map(Scalar::to_f64).collect(),
        }
    }
}

/// Residuals of the three equilibrium conditions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KktReport {
    /// Positively priced items must be fully sold.
    pub market_clearing: f64,
    /// Nobody may have bang-per-buck above its ratio, relative to the ratio.
    pub mbb_bound: f64,
    /// Items an agent holds must be at its ratio, relative to the ratio.
    pub mbb_tight: f64,
    pub tol: f64,
    pub pass: bool,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.market_clearing.max(self.mbb_bound).max(self.mbb_tight)
    }
}

impl std::fmt::Display for KktReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "clearing {:.3e}, mbb bound {:.3e}, mbb tight {:.3e} at tol {:.1e}: {}",
            self.market_clearing,
            self.mbb_bound,
            self.mbb_tight,
            self.tol,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

/// Bang-per-buck ratios `r_i = v_i(X_i) / e_i` implied by the allocation.
pub fn mbb_ratios<S: Scalar>(
    solution: &MarketSolution<S>,
    instance: &OfflineInstance<S>,
) -> Result<Vec<S>> {
    check_dims(solution, instance)?;
    solution
        .budgets
        .iter()
        .enumerate()
        .map(|(i, e)| {
            if !e.is_positive() {
                return Err(Error::InvalidInstance(format!(
                    "agent {i} has nonpositive budget {e}"
                )));
            }
            Ok(fractional_value(i, solution.allocation.row(i), instance) / e.clone())
        })
        .collect()
}

fn check_dims<S: Scalar>(
    solution: &MarketSolution<S>,
    instance: &OfflineInstance<S>,
) -> Result<()> {
    let (n, m) = (instance.n(), instance.m());
    if solution.budgets.len() != n
        || solution.prices.len() != m
        || solution.allocation.n() != n
        || solution.allocation.m() != m
    {
        return Err(Error::Dimension(format!(
            "solution is {}x{} with {} prices and {} budgets; instance is {n}x{m}",
            solution.allocation.n(),
            solution.allocation.m(),
            solution.prices.len(),
            solution.budgets.len()
        )));
    }
    Ok(())
}

/// Evaluates the equilibrium conditions. The ratios are recomputed from the
/// allocation, not read from `solution.mbb`.
pub fn check_kkt<S: Scalar>(
    solution: &MarketSolution<S>,
    instance: &OfflineInstance<S>,
    tol: f64,
) -> Result<KktReport> {
    check_dims(solution, instance)?;
    if let Some(j) = solution.prices.iter().position(|p| !p.is_positive()) {
        return Err(Error::InvalidInstance(format!(
            "item {j} has nonpositive price"
        )));
    }
    let r = mbb_ratios(solution, instance)?;
    let x = &solution.allocation;
    let mut clearing = 0.0f64;
    for j in 0..instance.m() {
        let gap = (S::one() - x.column_sum(j)).abs().to_f64();
        clearing = clearing.max(gap);
    }
    let held = Tol::new(tol);
    let mut bound = 0.0f64;
    let mut tight = 0.0f64;
    for (i, ri) in r.iter().enumerate() {
        for j in 0..instance.m() {
            let bpb = instance.value(i, j).clone() / solution.prices[j].clone();
            let excess = bpb.clone() - ri.clone();
            let rel = |d: S| -> f64 {
                if ri.is_positive() {
                    (d / ri.clone()).to_f64()
                } else if d.is_zero() {
                    0.0
                } else {
                    f64::INFINITY
                }
            };
            if excess.is_positive() {
                bound = bound.max(rel(excess.clone()));
            }
            if held.positive(x.get(i, j)) {
                tight = tight.max(rel(excess.abs()));
            }
        }
    }
    let pass = clearing <= tol && bound <= tol && tight <= tol;
    Ok(KktReport {
        market_clearing: clearing,
        mbb_bound: bound,
        mbb_tight: tight,
        tol,
        pass,
    })
}

/// Solves the Eisenberg-Gale program with the instance's budgets.
///
/// Proportional response runs in float arithmetic; every so often the
/// iterate's near-tight bang-per-buck structure is used to rebuild an
/// equilibrium directly in `S` (see [`polish`]). With `S = Rational` the
/// result is an exact equilibrium. The first reconstruction passing the KKT
/// check at `tol` is returned.
pub fn solve_eg<S: Scalar>(
    instance: &OfflineInstance<S>,
    tol: f64,
    max_iters: usize,
) -> Result<MarketSolution<S>> {
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(Error::Precondition(format!(
            "tolerance {tol} outside (0, 1e-3]"
        )));
    }
    if max_iters == 0 {
        return Err(Error::Precondition("max_iters must be positive".into()));
    }
    let float = instance.to_f64();
    let mut iterate = PrIterate::new(&float);
    let mut done = 0usize;
    let mut chunk = 16usize;
    let mut best: Option<(MarketSolution<f64>, KktReport)> = None;
    loop {
        if let Some(sol) = polish(instance, &iterate.prices(), tol) {
            return Ok(sol);
        }
        let raw = iterate.solution(&float)?;
        let report = check_kkt(&raw, &float, tol)?;
        if report.pass && !S::EXACT {
            // accept the raw iterate only in float mode
            let x = FractionalAllocation {
                shares: raw
                    .allocation
                    .shares
                    .iter()
                    .map(|row| row.iter().map(|v| S::from_f64_lossy(*v)).collect())
                    .collect(),
            };
            let prices = raw.prices.iter().map(|v| S::from_f64_lossy(*v)).collect();
            return MarketSolution::new(x, prices, instance.budgets().to_vec(), instance);
        }
        if best
            .as_ref()
            .is_none_or(|(_, b)| report.max_residual() < b.max_residual())
        {
            best = Some((raw, report));
        }
        if done >= max_iters {
            let (best, report) = best.expect("at least one iterate evaluated");
            return Err(Error::NonConvergence {
                iterations: done,
                best: Box::new(best),
                report,
            });
        }
        let steps = chunk.min(max_iters - done);
        proportional_response(&float, &mut iterate, steps);
        done += steps;
        chunk = (chunk * 2).min(4096);
    }
}
