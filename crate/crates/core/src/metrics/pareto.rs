use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::IntegralAllocation;
use crate::online::Precomputed;

/// Default cap on the number of complete assignments brute force may visit.
pub const BRUTE_FORCE_CAP: f64 = 1e6;
/// Utilities closer than this (relative) count as equal.
pub const UTILITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ParetoVerdict {
    Efficient,
    /// A dominating assignment (owner per item) and its utilities.
    Dominated {
        owners: Vec<usize>,
        utilities: Vec<f64>,
    },
    /// The certificate does not apply.
    Unknown,
}

impl ParetoVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            ParetoVerdict::Efficient => "efficient",
            ParetoVerdict::Dominated { .. } => "dominated",
            ParetoVerdict::Unknown => "unknown",
        }
    }
}

pub enum ParetoMode<'a> {
    Brute {
        cap: f64,
    },
    /// Offline allocation the run rounded, with each item's type.
    Certificate {
        precomputed: &'a Precomputed,
        arrivals: &'a [usize],
    },
}

fn check_size(n: usize, items: usize, cap: f64) -> Result<()> {
    let leaves = (n as f64).powi(items as i32);
    if leaves > cap {
        return Err(Error::SearchTooLarge { leaves, cap });
    }
    Ok(())
}

fn slack(u: f64) -> f64 {
    UTILITY_TOL * u.abs().max(1.0)
}

/// Depth-first search over assignments of items `t..` with running
/// utilities `acc`; `rest[t][i]` is what agent `i` could still collect.
struct Search<'a> {
    values: &'a [Vec<f64>],
    rest: Vec<Vec<f64>>,
    n: usize,
    owners: Vec<usize>,
}

impl Search<'_> {
    fn new(values: &[Vec<f64>], n: usize) -> Search<'_> {
        let items = values.len();
        let mut rest = vec![vec![0.0; n]; items + 1];
        for t in (0..items).rev() {
            for i in 0..n {
                rest[t][i] = rest[t + 1][i] + values[t][i];
            }
        }
        Search {
            values,
            rest,
            n,
            owners: vec![0; items],
        }
    }

    /// Finds an assignment whose utilities satisfy `accept`, pruning with
    /// `reachable(acc + rest)`.
    fn run(
        &mut self,
        t: usize,
        acc: &mut Vec<f64>,
        reachable: &dyn Fn(&[f64]) -> bool,
        accept: &dyn Fn(&[f64]) -> bool,
    ) -> bool {
        if t == self.values.len() {
            return accept(acc);
        }
        let best: Vec<f64> = (0..self.n).map(|i| acc[i] + self.rest[t][i]).collect();
        if !reachable(&best) {
            return false;
        }
        for i in 0..self.n {
            self.owners[t] = i;
            acc[i] += self.values[t][i];
            let found = self.run(t + 1, acc, reachable, accept);
            acc[i] -= self.values[t][i];
            if found {
                return true;
            }
        }
        false
    }
}

/// Pareto efficiency of an integral allocation among all assignments of the
/// same items.
pub fn is_pareto_efficient_integral(
    allocation: &IntegralAllocation,
    mode: ParetoMode<'_>,
) -> Result<ParetoVerdict> {
    let n = allocation.n();
    match mode {
        ParetoMode::Brute { cap } => {
            check_size(n, allocation.items(), cap)?;
            let u = allocation.utilities();
            let mut search = Search::new(&allocation.item_values, n);
            let reachable = |best: &[f64]| best.iter().zip(&u).all(|(b, ui)| *b >= ui - slack(*ui));
            let accept = |w: &[f64]| {
                w.iter().zip(&u).all(|(a, ui)| *a >= ui - slack(*ui))
                    && w.iter().zip(&u).any(|(a, ui)| *a > ui + slack(*ui))
            };
            let mut acc = vec![0.0; n];
            if search.run(0, &mut acc, &reachable, &accept) {
                let owners = search.owners.clone();
                let dominating = IntegralAllocation::from_assignments(
                    n,
                    &owners,
                    allocation.item_values.clone(),
                )?;
                Ok(ParetoVerdict::Dominated {
                    owners,
                    utilities: dominating.utilities(),
                })
            } else {
                Ok(ParetoVerdict::Efficient)
            }
        }
        ParetoMode::Certificate {
            precomputed,
            arrivals,
        } => {
            let owners = allocation.owners().ok_or_else(|| {
                Error::Dimension("allocation does not partition its items".into())
            })?;
            if arrivals.len() != owners.len() {
                return Err(Error::Dimension(format!(
                    "{} arrivals for {} items",
                    arrivals.len(),
                    owners.len()
                )));
            }
            let supported = owners
                .iter()
                .zip(arrivals)
                .all(|(&i, &j)| precomputed.x[i][j] > 0.0);
            Ok(if supported {
                ParetoVerdict::Efficient
            } else {
                ParetoVerdict::Unknown
            })
        }
    }
}

/// Whether some assignment of the items gives every agent strictly more
/// than `u_i / alpha`. `item_values[t][i]` is agent `i`'s value for item `t`.
pub fn alpha_pareto_improvable(
    utilities: &[f64],
    item_values: &[Vec<f64>],
    alpha: f64,
    cap: f64,
) -> Result<bool> {
    if !(alpha > 0.0) {
        return Err(Error::Precondition(format!(
            "alpha = {alpha} must be positive"
        )));
    }
    let n = utilities.len();
    check_size(n, item_values.len(), cap)?;
    let target: Vec<f64> = utilities.iter().map(|u| u / alpha).collect();
    let above = |w: &[f64]| w.iter().zip(&target).all(|(a, t)| *a > t + slack(*t));
    let mut search = Search::new(item_values, n);
    let mut acc = vec![0.0; n];
    Ok(search.run(0, &mut acc, &above, &above))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn footnote() -> Vec<Vec<f64>> {
        let e = 0.01;
        vec![vec![0.9, 0.5 + e], vec![0.1, 0.5 - e], vec![0.1, 0.5 - e]]
    }

    #[test]
    fn footnote_allocation_is_dominated() {
        let a = IntegralAllocation::from_assignments(2, &[1, 0, 0], footnote()).unwrap();
        match is_pareto_efficient_integral(
            &a,
            ParetoMode::Brute {
                cap: BRUTE_FORCE_CAP,
            },
        )
        .unwrap()
        {
            ParetoVerdict::Dominated { utilities, .. } => {
                assert!(utilities[0] > 0.2 && utilities[1] > 0.51);
            }
            other => panic!("{other:?}"),
        }
        let swapped = IntegralAllocation::from_assignments(2, &[0, 1, 1], footnote()).unwrap();
        assert_eq!(
            is_pareto_efficient_integral(
                &swapped,
                ParetoMode::Brute {
                    cap: BRUTE_FORCE_CAP
                }
            )
            .unwrap(),
            ParetoVerdict::Efficient
        );
    }

    #[test]
    fn single_owner_is_efficient() {
        let a =
            IntegralAllocation::from_assignments(1, &[0, 0], vec![vec![0.3], vec![0.8]]).unwrap();
        assert_eq!(
            is_pareto_efficient_integral(&a, ParetoMode::Brute { cap: 10.0 }).unwrap(),
            ParetoVerdict::Efficient
        );
    }

    #[test]
    fn brute_force_cap() {
        let a = IntegralAllocation::from_assignments(3, &[0; 20], vec![vec![1.0; 3]; 20]).unwrap();
        assert!(matches!(
            is_pareto_efficient_integral(
                &a,
                ParetoMode::Brute {
                    cap: BRUTE_FORCE_CAP
                }
            ),
            Err(Error::SearchTooLarge { .. })
        ));
    }

    #[test]
    fn certificate_requires_support() {
        let pre =
            Precomputed::new(vec![vec![1.0, 0.5], vec![0.0, 0.5]], vec![vec![0], vec![1]]).unwrap();
        let a =
            IntegralAllocation::from_assignments(2, &[0, 1], vec![vec![1.0, 0.0], vec![0.5, 0.5]])
                .unwrap();
        let mode = ParetoMode::Certificate {
            precomputed: &pre,
            arrivals: &[0, 1],
        };
        assert_eq!(
            is_pareto_efficient_integral(&a, mode).unwrap(),
            ParetoVerdict::Efficient
        );
        let b =
            IntegralAllocation::from_assignments(2, &[1, 1], vec![vec![1.0, 0.0], vec![0.5, 0.5]])
                .unwrap();
        let mode = ParetoMode::Certificate {
            precomputed: &pre,
            arrivals: &[0, 1],
        };
        assert_eq!(
            is_pareto_efficient_integral(&b, mode).unwrap(),
            ParetoVerdict::Unknown
        );
    }

    #[test]
    fn alpha_improvability() {
        let lb = crate::adversary::lower_bound_instance(2, 4, 0.1).unwrap();
        assert!(alpha_pareto_improvable(&[1.1, 1.1], &lb.values, 1.0, BRUTE_FORCE_CAP).unwrap());
        assert!(!alpha_pareto_improvable(&[2.0, 2.0], &lb.values, 1.0, BRUTE_FORCE_CAP).unwrap());
        assert!(alpha_pareto_improvable(&[0.0, 0.0], &lb.values, 1.0, BRUTE_FORCE_CAP).unwrap());
        // (2, 2) is reachable, so beating (2, 2) / 1.5 works but (2, 2) / 0.9 does not
        assert!(alpha_pareto_improvable(&[2.0, 2.0], &lb.values, 1.5, BRUTE_FORCE_CAP).unwrap());
        assert!(!alpha_pareto_improvable(&[2.0, 2.0], &lb.values, 0.9, BRUTE_FORCE_CAP).unwrap());
    }
}
