//! Exact equilibrium reconstruction from an approximate price vector.
//!
//! Equilibrium prices of a linear Fisher market are unique, and they are pinned
//! down by which (agent, item) pairs are bang-per-buck tight: along a tight
//! edge `p_j = v_ij / r_i`, and in each connected component of tight edges the
//! prices add up to the budgets of its agents. Given a guess of the tight
//! edges, prices and ratios follow by propagation along a spanning tree, and
//! a max-flow decides whether the budgets can be spent on tight edges only.
//! Any guess passing both checks is an equilibrium.

use std::collections::VecDeque;

use crate::flow::FlowNetwork;
use crate::instance::{FractionalAllocation, OfflineInstance};
use crate::scalar::{Scalar, Tol};

use super::{check_kkt, MarketSolution};

const THRESHOLDS: [f64; 8] = [1e-12, 1e-10, 1e-8, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2];
const FLOAT_REL: f64 = 1e-9;

/// Tries to rebuild an equilibrium whose tight edges are the pairs within a
/// relative threshold of their agent's best bang-per-buck under
/// `hint_prices`. Thresholds are tried from tight to loose; returns the first
/// reconstruction that passes the KKT check at `tol`.
pub fn polish<S: Scalar>(
    instance: &OfflineInstance<S>,
    hint_prices: &[f64],
    tol: f64,
) -> Option<MarketSolution<S>> {
    let float = instance.to_f64();
    let (n, m) = (instance.n(), instance.m());
    if hint_prices.len() != m || hint_prices.iter().any(|p| !(*p > 0.0)) {
        return None;
    }
    let best: Vec<f64> = (0..n)
        .map(|i| {
            (0..m)
                .map(|j| float.values()[i][j] / hint_prices[j])
                .fold(0.0, f64::max)
        })
        .collect();
    let mut last: Option<Vec<Vec<bool>>> = None;
    for theta in THRESHOLDS {
        let candidate: Vec<Vec<bool>> = (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let v = float.values()[i][j];
                        v > 0.0 && v / hint_prices[j] >= best[i] * (1.0 - theta)
                    })
                    .collect()
            })
            .collect();
        if last.as_ref() == Some(&candidate) {
            continue;
        }
        if let Some(sol) = reconstruct(instance, &candidate) {
            if check_kkt(&sol, instance, tol).is_ok_and(|r| r.pass) {
                return Some(sol);
            }
        }
        last = Some(candidate);
    }
    None
}

fn close<S: Scalar>(a: &S, b: &S) -> bool {
    Tol::new(FLOAT_REL).eq(a, b)
}

/// Builds prices, ratios and a flow-based allocation using only `edges`.
fn reconstruct<S: Scalar>(
    instance: &OfflineInstance<S>,
    edges: &[Vec<bool>],
) -> Option<MarketSolution<S>> {
    let (n, m) = (instance.n(), instance.m());
    let v = instance.values();
    let e = instance.budgets();
    let mut ratio: Vec<Option<S>> = vec![None; n];
    let mut price: Vec<Option<S>> = vec![None; m];

    for root in 0..n {
        if ratio[root].is_some() {
            continue;
        }
        ratio[root] = Some(S::one());
        let mut agents = vec![root];
        let mut items = Vec::new();
        // queue of (is_agent, index)
        let mut queue = VecDeque::from([(true, root)]);
        while let Some((is_agent, k)) = queue.pop_front() {
            if is_agent {
                let r = ratio[k].clone().expect("visited agent has a ratio");
                for j in 0..m {
                    if edges[k][j] && price[j].is_none() {
                        price[j] = Some(v[k][j].clone() / r.clone());
                        items.push(j);
                        queue.push_back((false, j));
                    }
                }
            } else {
                let p = price[k].clone().expect("visited item has a price");
                for i in 0..n {
                    if edges[i][k] && ratio[i].is_none() {
                        ratio[i] = Some(v[i][k].clone() / p.clone());
                        agents.push(i);
                        queue.push_back((true, i));
                    }
                }
            }
        }
        let money: S = agents.iter().map(|&i| e[i].clone()).sum();
        let total: S = items.iter().map(|&j| price[j].clone().unwrap()).sum();
        if !total.is_positive() {
            return None;
        }
        let scale = money / total;
        for &j in &items {
            price[j] = Some(price[j].take().unwrap() * scale.clone());
        }
        for &i in &agents {
            ratio[i] = Some(ratio[i].take().unwrap() / scale.clone());
        }
    }
    // an item nobody is tight on cannot be priced
    let prices: Vec<S> = price.into_iter().collect::<Option<_>>()?;
    let ratios: Vec<S> = ratio.into_iter().map(Option::unwrap).collect();

    let mut tight = vec![vec![false; m]; n];
    for i in 0..n {
        for j in 0..m {
            let cap = ratios[i].clone() * prices[j].clone();
            if v[i][j] > cap && !(!S::EXACT && close(&v[i][j], &cap)) {
                return None;
            }
            tight[i][j] = edges[i][j]
                && if S::EXACT {
                    v[i][j] == cap
                } else {
                    close(&v[i][j], &cap)
                };
        }
    }

    let source = 0;
    let sink = n + m + 1;
    let money: S = e.iter().cloned().sum();
    let mut net = FlowNetwork::new(n + m + 2);
    for i in 0..n {
        net.add_capacity(source, 1 + i, e[i].clone());
        for j in 0..m {
            if tight[i][j] {
                net.add_capacity(1 + i, 1 + n + j, money.clone());
            }
        }
    }
    for (j, p) in prices.iter().enumerate() {
        net.add_capacity(1 + n + j, sink, p.clone());
    }
    let flow = net.max_flow(source, sink, Tol::new(1e-13), &money);
    let saturated = if S::EXACT {
        flow == money
    } else {
        close(&flow, &money)
    };
    if !saturated {
        return None;
    }
    let shares = (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let x = net.flow(1 + i, 1 + n + j).clone() / prices[j].clone();
                    if S::EXACT {
                        x
                    } else {
                        S::min_of(S::max_of(x, S::zero()), S::one())
                    }
                })
                .collect()
        })
        .collect();
    MarketSolution::new(
        FractionalAllocation { shares },
        prices,
        e.to_vec(),
        instance,
    )
    .ok()
}
