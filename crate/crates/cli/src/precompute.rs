use std::path::Path;

use fairdiv::adversary::{independent_expansion, AdversaryConfig, DEFAULT_TYPE_CAP};
use fairdiv::cisef::{
    build_indifference_graph, strongify_independent, CisefOptions, CliquePartition, TraceEvent,
};
use fairdiv::instance::{scale_values, Lift, OfflineInstance, TypeDistribution};
use fairdiv::io::{Num, SolutionJson};
use fairdiv::market::{check_kkt, solve_eg, KktReport, MarketSolution};
use fairdiv::online::{Policy, Precomputed};
use fairdiv::{Rational, Scalar};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Contents of `solution.json`: the market solution over the items someone
/// values, plus what the rounding allocators need.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    /// `"float"` or `"rational"`.
    pub mode: String,
    #[serde(flatten)]
    pub solution: SolutionJson,
    /// Type index of each column of `x`.
    pub kept: Vec<usize>,
    pub m_full: usize,
    pub cliques: Vec<Vec<usize>>,
    /// Indifference edges `[i, j]` of the final allocation.
    pub edges: Vec<(usize, usize)>,
    /// Fractional allocation over every type, as used for rounding.
    pub x_full: Vec<Vec<f64>>,
    pub kkt_max_residual: f64,
}

impl SolutionFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
    }

    pub fn precomputed(&self) -> Result<Precomputed, CliError> {
        Ok(Precomputed::new(self.x_full.clone(), self.cliques.clone())?)
    }

    pub fn budgets(&self) -> Result<Vec<f64>, CliError> {
        Ok(self
            .solution
            .e
            .iter()
            .map(Num::to_f64)
            .collect::<Result<_, _>>()?)
    }
}

/// Everything `precompute` produced.
pub struct PrecomputeOutput {
    pub file: SolutionFile,
    pub trace: Vec<TraceEvent>,
    pub kkt: KktReport,
}

/// Offline step for the rounding allocators: the equal-budget equilibrium
/// for `por`, the CISEF refinement for `pocr` (and any other allocator).
pub fn precompute(config: &ExperimentConfig, rational: bool) -> Result<PrecomputeOutput, CliError> {
    if !config.adversary.is_distributional() {
        return Err(CliError::Config(
            "precompute needs a distribution-based adversary".into(),
        ));
    }
    let dist = config.adversary.distribution()?;
    if rational {
        solve::<Rational>(config, &dist)
    } else {
        solve::<f64>(config, &dist)
    }
}

fn solve<S: Scalar + Lift>(
    config: &ExperimentConfig,
    dist: &TypeDistribution,
) -> Result<PrecomputeOutput, CliError> {
    let opts = CisefOptions::default();
    let inst: OfflineInstance<S> = scale_values(dist, &vec![S::one(); dist.n()])?;
    let (solution, cliques, trace) = if config.allocator == Policy::Por {
        let sol = solve_eg(&inst, opts.solver_tol, opts.max_iters)?;
        (sol, (0..dist.n()).map(|i| vec![i]).collect(), Vec::new())
    } else {
        let out = fairdiv::cisef::compute_cisef(&inst, &opts)?;
        if config.strong_ef {
            let AdversaryConfig::IndependentIid { marginals } = &config.adversary else {
                return Err(CliError::Config(
                    "strong_ef needs an independent_iid adversary".into(),
                ));
            };
            let exp = independent_expansion(marginals, DEFAULT_TYPE_CAP)?;
            let (strong, graph) = strongify_independent(&inst, &exp, &out.solution, &opts)?;
            let part = CliquePartition::from_components(&graph, &strong);
            (strong, part.cliques, out.trace)
        } else {
            (out.solution, out.partition.cliques, out.trace)
        }
    };
    let kkt = check_kkt(&solution, &inst, opts.kkt_tol)?;
    if !kkt.pass {
        return Err(CliError::Solver(kkt.to_string()));
    }
    let edges = build_indifference_graph(&solution, &inst, opts.eps_ind).edges();
    let pre = Precomputed::from_solution(&inst, &solution, cliques.clone())?;
    let file = SolutionFile {
        mode: if S::EXACT { "rational" } else { "float" }.into(),
        solution: SolutionJson::from_solution(&solution),
        kept: inst.kept().to_vec(),
        m_full: inst.m_full(),
        cliques,
        edges,
        x_full: pre.x,
        kkt_max_residual: kkt.max_residual(),
    };
    Ok(PrecomputeOutput { file, trace, kkt })
}

/// Rebuilds the typed solution against `inst` (columns must match `kept`).
pub fn typed_solution<S: Scalar + Lift>(
    file: &SolutionFile,
    inst: &OfflineInstance<S>,
) -> Result<MarketSolution<S>, CliError> {
    if file.kept != inst.kept() {
        return Err(CliError::Config(
            "solution columns do not match the instance's item types".into(),
        ));
    }
    Ok(file.solution.to_solution(inst)?)
}
