use serde::Serialize;

use crate::error::{Error, Result};
use crate::online::OnlineRun;

use super::envy::EnvyReport;

/// Statistics of many runs at one checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckpointStats {
    pub t: usize,
    pub runs: usize,
    pub mean_max_envy: f64,
    pub median_max_envy: f64,
    pub p90_max_envy: f64,
    pub worst_max_envy: f64,
    pub p_ef: f64,
    pub p_ef1: f64,
    /// `mean_max_envy / sqrt(t ln t)`; zero for `t < 2`.
    pub envy_ratio: f64,
    /// `pair_ef[i][j]`: fraction of runs where `i` does not envy `j`.
    pub pair_ef: Vec<Vec<f64>>,
    pub pair_ef1: Vec<Vec<f64>>,
}

/// `sqrt(t ln t)`, the envy scale of random allocation.
pub fn envy_scale(t: usize) -> f64 {
    let t = t as f64;
    if t < 2.0 {
        0.0
    } else {
        (t * t.ln()).sqrt()
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// Per-checkpoint statistics over runs that share a configuration. Every run
/// must carry snapshots at the same checkpoints.
pub fn envy_trace_summary(runs: &[OnlineRun]) -> Result<Vec<CheckpointStats>> {
    let first = runs
        .first()
        .ok_or_else(|| Error::Precondition("no runs to summarize".into()))?;
    let checkpoints: Vec<usize> = first.envy_trace.iter().map(|s| s.t).collect();
    for run in runs {
        if run
            .envy_trace
            .iter()
            .map(|s| s.t)
            .ne(checkpoints.iter().copied())
        {
            return Err(Error::Precondition(
                "runs were sampled at different checkpoints".into(),
            ));
        }
    }
    let count = runs.len() as f64;
    let mut out = Vec::with_capacity(checkpoints.len());
    for (c, &t) in checkpoints.iter().enumerate() {
        let reports: Vec<EnvyReport> = runs
            .iter()
            .map(|r| EnvyReport::from_snapshot(&r.envy_trace[c]))
            .collect();
        let n = reports[0].matrix.len();
        let mut envies: Vec<f64> = reports.iter().map(|r| r.max_envy).collect();
        let mean = envies.iter().sum::<f64>() / count;
        envies.sort_by(f64::total_cmp);
        let frac = |f: &dyn Fn(&EnvyReport) -> bool| {
            reports.iter().filter(|r| f(r)).count() as f64 / count
        };
        let pair = |pick: fn(&EnvyReport, usize, usize) -> bool| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| reports.iter().filter(|r| pick(r, i, j)).count() as f64 / count)
                        .collect()
                })
                .collect()
        };
        let scale = envy_scale(t);
        out.push(CheckpointStats {
            t,
            runs: runs.len(),
            mean_max_envy: mean,
            median_max_envy: quantile(&envies, 0.5),
            p90_max_envy: quantile(&envies, 0.9),
            worst_max_envy: *envies.last().expect("at least one run"),
            p_ef: frac(&|r| r.ef),
            p_ef1: frac(&|r| r.ef1),
            envy_ratio: if scale > 0.0 { mean / scale } else { 0.0 },
            pair_ef: pair(|r, i, j| r.pair_ef[i][j]),
            pair_ef1: pair(|r, i, j| r.pair_ef1[i][j]),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::TypeDistribution;
    use crate::online::{run_online, Policy};

    #[test]
    fn worthless_items_have_no_envy() {
        let dist = TypeDistribution::new(vec![1.0], vec![vec![0.0]; 2]).unwrap();
        let runs: Vec<OnlineRun> = (0..5)
            .map(|k| {
                run_online(&dist, Policy::Uniform, None, 50, 1, k, &[10, 50])
                    .unwrap()
                    .1
            })
            .collect();
        let stats = envy_trace_summary(&runs).unwrap();
        assert_eq!(stats.len(), 2);
        assert!(stats
            .iter()
            .all(|s| s.mean_max_envy == 0.0 && s.p_ef == 1.0));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(envy_trace_summary(&[]).is_err());
    }

    #[test]
    fn scale_values() {
        assert_eq!(envy_scale(1), 0.0);
        assert!((envy_scale(100) - (100.0 * 100f64.ln()).sqrt()).abs() < 1e-12);
    }
}
