//! Seeded instance generators shared by the acceptance suite.
//!
//! Every generator takes the caller's RNG, so a fixed seed reproduces the
//! same instances.

use fairdiv::adversary::{TypeSpec, ValueDistribution};
use fairdiv::io::Num;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n x m` values drawn uniformly from `[0, 1)` with `n` in `1..=max_n` and
/// `m` in `1..=max_m`. Rows that came out all zero are redrawn.
pub fn random_values(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> Vec<Vec<f64>> {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    (0..n)
        .map(|_| loop {
            let row: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
            if row.iter().any(|&v| v > 0.0) {
                break row;
            }
        })
        .collect()
}

/// A correlated distribution as `(probs, values)` with `values` agent-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Correlated {
    pub probs: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Correlated {
    /// The same distribution as type specs for an experiment config.
    pub fn type_specs(&self) -> Vec<TypeSpec> {
        (0..self.probs.len())
            .map(|j| TypeSpec {
                prob: Num::Float(self.probs[j]),
                values: self.values.iter().map(|row| Num::Float(row[j])).collect(),
            })
            .collect()
    }
}

/// `n` agents and 1 to `max_m` types. Probabilities are proportional to
/// integer weights in `1..=4`; values lie on the grid `k / 20`.
pub fn random_correlated(rng: &mut ChaCha8Rng, n: usize, max_m: usize) -> Correlated {
    let m = rng.gen_range(1..=max_m);
    loop {
        let weights: Vec<f64> = (0..m).map(|_| rng.gen_range(1..=4) as f64).collect();
        let total: f64 = weights.iter().sum();
        let values: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| rng.gen_range(0..=20) as f64 / 20.0)
                    .collect()
            })
            .collect();
        if values.iter().all(|row| row.iter().any(|&v| v > 0.0)) {
            return Correlated {
                probs: weights.iter().map(|w| w / total).collect(),
                values,
            };
        }
    }
}

/// Three agents over 2 to 4 types. When `proportional` is set, agent 1's
/// values are agent 0's scaled by 1/2, 3/4 or 1, which makes the pair
/// indifferent at any equilibrium.
pub fn clique_prone_correlated(rng: &mut ChaCha8Rng, proportional: bool) -> Correlated {
    loop {
        let m = rng.gen_range(2..=4);
        let weights: Vec<f64> = (0..m).map(|_| rng.gen_range(1..=4) as f64).collect();
        let total: f64 = weights.iter().sum();
        let mut values: Vec<Vec<f64>> = (0..3)
            .map(|_| {
                (0..m)
                    .map(|_| rng.gen_range(0..=20) as f64 / 20.0)
                    .collect()
            })
            .collect();
        if proportional {
            let c = rng.gen_range(2..=4) as f64 / 4.0;
            values[1] = values[0].iter().map(|v| v * c).collect();
        }
        if values.iter().all(|row| row.iter().any(|&v| v > 0.0)) {
            return Correlated {
                probs: weights.iter().map(|w| w / total).collect(),
                values,
            };
        }
    }
}

/// Independent marginals for 1 to `max_n` agents, each with 2 or 3 distinct
/// values from `{0, 1/4, ..., 2}` and weights in `1..=3`.
pub fn random_independent(rng: &mut ChaCha8Rng, max_n: usize) -> Vec<ValueDistribution> {
    let n = rng.gen_range(1..=max_n);
    (0..n)
        .map(|_| {
            let k = rng.gen_range(2..=3);
            let mut grid: Vec<u32> = (0..=8).collect();
            let mut picked = Vec::with_capacity(k);
            for _ in 0..k {
                let at = rng.gen_range(0..grid.len());
                picked.push(grid.swap_remove(at));
            }
            picked.sort_unstable();
            if picked.iter().all(|&v| v == 0) {
                picked[k - 1] = 8;
            }
            let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(1..=3) as f64).collect();
            let total: f64 = weights.iter().sum();
            ValueDistribution::new(
                picked.iter().map(|&v| v as f64 / 4.0).collect(),
                weights.iter().map(|w| w / total).collect(),
            )
            .expect("valid marginal")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_reproducible() {
        let a = random_correlated(&mut rng(3), 3, 4);
        let b = random_correlated(&mut rng(3), 3, 4);
        assert_eq!(a, b);
        assert!((a.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn proportional_agents_scale() {
        let d = clique_prone_correlated(&mut rng(1), true);
        let ratio: Vec<f64> = d.values[0]
            .iter()
            .zip(&d.values[1])
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, b)| b / a)
            .collect();
        assert!(ratio.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
    }

    #[test]
    fn independent_supports_have_two_or_three_values() {
        let mut r = rng(9);
        for _ in 0..50 {
            for m in random_independent(&mut r, 3) {
                assert!((2..=3).contains(&m.values.len()));
                assert!(m.values.iter().any(|&v| v > 0.0));
            }
        }
    }
}
