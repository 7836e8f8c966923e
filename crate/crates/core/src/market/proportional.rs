use crate::error::Result;
use crate::instance::{FractionalAllocation, OfflineInstance};

use super::MarketSolution;

/// Bid matrix of proportional-response dynamics.
#[derive(Clone, Debug)]
pub struct PrIterate {
    bids: Vec<Vec<f64>>,
}

impl PrIterate {
    /// Every agent splits its budget in proportion to its values.
    pub fn new(instance: &OfflineInstance<f64>) -> Self {
        let bids = instance
            .values()
            .iter()
            .zip(instance.budgets())
            .map(|(row, e)| {
                let total: f64 = row.iter().sum();
                row.iter()
                    .map(|v| if *v > 0.0 { e * v / total } else { 0.0 })
                    .collect()
            })
            .collect();
        PrIterate { bids }
    }

    pub fn bids(&self) -> &[Vec<f64>] {
        &self.bids
    }

    pub fn prices(&self) -> Vec<f64> {
        let m = self.bids[0].len();
        (0..m)
            .map(|j| self.bids.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn solution(&self, instance: &OfflineInstance<f64>) -> Result<MarketSolution<f64>> {
        let prices = self.prices();
        let shares = self
            .bids
            .iter()
            .map(|row| row.iter().zip(&prices).map(|(b, p)| b / p).collect())
            .collect();
        MarketSolution::new(
            FractionalAllocation { shares },
            prices,
            instance.budgets().to_vec(),
            instance,
        )
    }
}

/// Runs `steps` rounds of `b_ij <- e_i * v_ij * x_ij / u_i`.
pub fn proportional_response(
    instance: &OfflineInstance<f64>,
    iterate: &mut PrIterate,
    steps: usize,
) {
    let values = instance.values();
    let budgets = instance.budgets();
    let m = instance.m();
    let mut prices = iterate.prices();
    let mut gains = vec![0.0; m];
    for _ in 0..steps {
        for (i, row) in iterate.bids.iter_mut().enumerate() {
            let mut utility = 0.0;
            for j in 0..m {
                gains[j] = values[i][j] * row[j] / prices[j];
                utility += gains[j];
            }
            for j in 0..m {
                row[j] = budgets[i] * gains[j] / utility;
            }
        }
        for (j, p) in prices.iter_mut().enumerate() {
            *p = iterate.bids.iter().map(|r| r[j]).sum();
        }
    }
}
