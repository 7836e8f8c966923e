use std::path::{Path, PathBuf};

use fairdiv::adversary::AdversaryConfig;
use fairdiv::online::{default_checkpoints, Policy};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One experiment: an adversary, an allocator and how many seeded trials
/// of `T` rounds to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub adversary: AdversaryConfig,
    pub allocator: Policy,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Rounds after which envy is measured; powers of two and `T` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
    #[serde(default)]
    pub outputs: OutputPaths,
    /// A `solution.json` from `precompute`, reused instead of solving again.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precomputed: Option<PathBuf>,
    /// Break the remaining cliques for independent agents before rounding.
    #[serde(default)]
    pub strong_ef: bool,
    #[serde(default)]
    pub po_check: PoCheck,
}

fn one() -> usize {
    1
}

/// File names of the outputs, relative to the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub summary: PathBuf,
    pub pairs: PathBuf,
    pub trace: PathBuf,
    pub solution: PathBuf,
    pub cisef_trace: PathBuf,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            summary: "summary.csv".into(),
            pairs: "pairs.csv".into(),
            trace: "trace.jsonl".into(),
            solution: "solution.json".into(),
            cisef_trace: "cisef_trace.jsonl".into(),
        }
    }
}

/// Which Pareto test fills the `po_verdict` column.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoCheck {
    /// Certificate when the allocator rounds a precomputed allocation,
    /// brute force when the prefix is small enough, otherwise `n/a`.
    #[default]
    Auto,
    Brute,
    Certificate,
    Off,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("cannot parse config {}: {e}", path.display())))
    }

    pub fn n(&self) -> usize {
        self.adversary.n()
    }

    pub fn checkpoints(&self) -> Vec<usize> {
        match &self.checkpoints {
            Some(c) => {
                let mut c = c.clone();
                c.sort_unstable();
                c.dedup();
                c
            }
            None if self.horizon == 0 => vec![0],
            None => default_checkpoints(self.horizon),
        }
    }

    /// Structural checks and allocator/adversary compatibility.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        if let Some(c) = &self.checkpoints {
            if let Some(bad) = c.iter().find(|&&t| t == 0 || t > self.horizon) {
                return Err(CliError::Config(format!(
                    "checkpoint {bad} outside [1, {}]",
                    self.horizon
                )));
            }
        }
        self.adversary
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.n() == 0 {
            return Err(CliError::Config("the adversary has no agents".into()));
        }
        if self.allocator.needs_precompute() && !self.adversary.is_distributional() {
            return Err(CliError::Config(format!(
                "allocator {} needs a distribution-based adversary",
                self.allocator
            )));
        }
        if self.strong_ef && !matches!(self.adversary, AdversaryConfig::IndependentIid { .. }) {
            return Err(CliError::Config(
                "strong_ef needs an independent_iid adversary".into(),
            ));
        }
        if self.po_check == PoCheck::Certificate && !self.allocator.needs_precompute() {
            return Err(CliError::Config(format!(
                "no Pareto certificate exists for {}",
                self.allocator
            )));
        }
        if let AdversaryConfig::NonadaptiveLb { n, .. } = self.adversary {
            if !self.horizon.is_multiple_of(n) {
                return Err(CliError::Config(format!(
                    "T = {} is not divisible by n = {n}",
                    self.horizon
                )));
            }
        }
        Ok(())
    }
}
