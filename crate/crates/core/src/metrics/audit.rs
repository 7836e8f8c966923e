use serde::Serialize;

use crate::cisef::{indifferent, value_table, CliquePartition};
use crate::instance::OfflineInstance;
use crate::market::{mbb_ratios, MarketSolution};
use crate::scalar::{Scalar, Tol};

/// Outcome of the CISEF audit; `violations` explains every failed check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CisefAudit {
    pub envy_free: bool,
    /// Every part is a clique of the indifference graph and no edge joins two parts.
    pub clique_structure: bool,
    pub identical_rows: bool,
    /// Members of a part value the items they hold proportionally.
    pub scaled_values: bool,
    pub violations: Vec<String>,
    pub pass: bool,
}

/// Checks the four CISEF conditions at relative tolerance `eps`.
pub fn is_cisef<S: Scalar>(
    solution: &MarketSolution<S>,
    instance: &OfflineInstance<S>,
    partition: &CliquePartition<S>,
    eps: f64,
) -> CisefAudit {
    let n = solution.n();
    let mut violations = Vec::new();
    let mut part_of = vec![usize::MAX; n];
    for (c, members) in partition.cliques.iter().enumerate() {
        for &a in members {
            if a < n {
                part_of[a] = c;
            }
        }
    }
    if let Some(a) = part_of.iter().position(|&c| c == usize::MAX) {
        violations.push(format!("agent {a} is in no part"));
    }
    let table = value_table(solution, instance);
    let tol = Tol::new(eps);

    let mut envy_free = true;
    for i in 0..n {
        for j in 0..n {
            let excess = table[i][j].clone() - table[i][i].clone();
            if excess.is_positive() && !tol.negligible(&excess, &table[i][i]) {
                envy_free = false;
                violations.push(format!("agent {i} envies agent {j}"));
            }
        }
    }

    let mut clique_structure = true;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let edge = indifferent(&table[i][i], &table[i][j], eps);
            let same = part_of[i] == part_of[j];
            if same && !edge {
                clique_structure = false;
                violations.push(format!(
                    "agents {i} and {j} share a part but {i} is not indifferent to {j}"
                ));
            }
            if !same && edge {
                clique_structure = false;
                violations.push(format!("indifference edge ({i},{j}) crosses parts"));
            }
        }
    }

    let mut identical_rows = true;
    for members in &partition.cliques {
        let first = members[0];
        for &a in &members[1..] {
            for k in 0..solution.m() {
                let d = (solution.allocation.get(a, k).clone()
                    - solution.allocation.get(first, k).clone())
                .abs();
                if d.to_f64() > eps && !(S::EXACT && d.is_zero()) {
                    identical_rows = false;
                    violations.push(format!(
                        "agents {first} and {a} hold different shares of item {k}"
                    ));
                }
            }
        }
    }

    let mut scaled_values = true;
    match mbb_ratios(solution, instance) {
        Err(e) => {
            scaled_values = false;
            violations.push(e.to_string());
        }
        Ok(r) => {
            for members in &partition.cliques {
                for &j in members {
                    for &k in members {
                        if j >= k {
                            continue;
                        }
                        for l in 0..solution.m() {
                            if !tol.positive(solution.allocation.get(j, l))
                                && !tol.positive(solution.allocation.get(k, l))
                            {
                                continue;
                            }
                            let lhs = instance.value(j, l).clone() * r[k].clone();
                            let rhs = instance.value(k, l).clone() * r[j].clone();
                            let scale = S::max_of(lhs.abs(), rhs.abs());
                            if !tol.negligible(&(lhs - rhs), &scale) {
                                scaled_values = false;
                                violations.push(format!(
                                    "agents {j} and {k} value item {l} out of proportion"
                                ));
                            }
                        }
                    }
                }
            }
        }
    }

    let pass = violations.is_empty();
    CisefAudit {
        envy_free,
        clique_structure,
        identical_rows,
        scaled_values,
        violations,
        pass,
    }
}
