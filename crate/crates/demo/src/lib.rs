//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function takes and returns JSON text. The `*_json`
//! functions hold the logic and also run natively, which is how they are
//! tested.

use fairdiv::cisef::{build_indifference_graph, compute_cisef, CisefOptions};
use fairdiv::instance::{IntegralAllocation, OfflineInstance, TypeDistribution};
use fairdiv::market::{solve_eg, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use fairdiv::metrics::{
    envy_report, envy_scale, is_pareto_efficient_integral, EnvyReport, ParetoMode, ParetoVerdict,
};
use fairdiv::online::{default_checkpoints, run_online, Policy, Precomputed};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Largest horizon the page may simulate.
pub const MAX_ROUNDS: usize = 200_000;
/// Brute-force Pareto checks on the page stop at this many assignments.
pub const DEMO_BRUTE_CAP: f64 = 2e5;

#[derive(Deserialize)]
struct MarketInput {
    /// `values[i][j]`: agent `i`'s value for item `j`.
    values: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct MarketView {
    x: Vec<Vec<f64>>,
    p: Vec<f64>,
    e: Vec<f64>,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize)]
struct MarketOutput {
    equal_budgets: MarketView,
    cisef: MarketView,
    cliques: Vec<Vec<usize>>,
    steps: Vec<String>,
}

fn view(sol: &fairdiv::market::MarketSolution<f64>, inst: &OfflineInstance<f64>) -> MarketView {
    MarketView {
        x: sol.allocation.shares.clone(),
        p: sol.prices.clone(),
        e: sol.budgets.clone(),
        edges: build_indifference_graph(sol, inst, CisefOptions::default().eps_ind).edges(),
    }
}

/// Equal-budget equilibrium and its CISEF refinement for a value matrix.
pub fn solve_market_json(input: &str) -> Result<String, String> {
    let input: MarketInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let inst = OfflineInstance::with_unit_budgets(input.values).map_err(|e| e.to_string())?;
    let start = solve_eg(&inst, DEFAULT_TOL, DEFAULT_MAX_ITERS).map_err(|e| e.to_string())?;
    let out = compute_cisef(&inst, &CisefOptions::default()).map_err(|e| e.to_string())?;
    let steps = out
        .trace
        .iter()
        .map(|ev| format!("{} on {:?}: removed {:?}", ev.op, ev.agents, ev.removed))
        .collect();
    let result = MarketOutput {
        equal_budgets: view(&start, &inst),
        cisef: view(&out.solution, &inst),
        cliques: out.partition.cliques,
        steps,
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

#[derive(Deserialize)]
struct SimulationInput {
    probs: Vec<f64>,
    /// `values[i][j]`: agent `i`'s value for type `j`.
    values: Vec<Vec<f64>>,
    policy: Policy,
    rounds: usize,
    seed: u64,
}

#[derive(Serialize)]
struct SimulationOutput {
    t: Vec<usize>,
    max_envy: Vec<f64>,
    /// `sqrt(t ln t)` at each checkpoint, for comparison.
    scale: Vec<f64>,
    peak_envy: f64,
    utilities: Vec<f64>,
    ef1: bool,
}

/// One seeded run of an online allocator with envy at powers of two.
pub fn simulate_json(input: &str) -> Result<String, String> {
    let input: SimulationInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    if input.rounds > MAX_ROUNDS {
        return Err(format!("at most {MAX_ROUNDS} rounds"));
    }
    let dist = TypeDistribution::new(input.probs, input.values).map_err(|e| e.to_string())?;
    let opts = CisefOptions::default();
    let pre = match input.policy {
        Policy::Pocr => Some(
            Precomputed::cisef::<f64>(&dist, &opts)
                .map_err(|e| e.to_string())?
                .0,
        ),
        Policy::Por => {
            Some(Precomputed::product_maximizing::<f64>(&dist, &opts).map_err(|e| e.to_string())?)
        }
        _ => None,
    };
    let checkpoints = default_checkpoints(input.rounds);
    let (alloc, run) = run_online(
        &dist,
        input.policy,
        pre.as_ref(),
        input.rounds,
        input.seed,
        0,
        &checkpoints,
    )
    .map_err(|e| e.to_string())?;
    let reports: Vec<EnvyReport> = run
        .envy_trace
        .iter()
        .map(EnvyReport::from_snapshot)
        .collect();
    let out = SimulationOutput {
        t: run.envy_trace.iter().map(|s| s.t).collect(),
        max_envy: reports.iter().map(|r| r.max_envy).collect(),
        scale: run.envy_trace.iter().map(|s| envy_scale(s.t)).collect(),
        peak_envy: run.peak_envy,
        utilities: alloc.utilities(),
        ef1: reports.last().is_none_or(|r| r.ef1),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Deserialize)]
struct AllocationInput {
    /// `items[t][i]`: agent `i`'s value for item `t`.
    items: Vec<Vec<f64>>,
    owners: Vec<usize>,
    n: usize,
}

#[derive(Serialize)]
struct AllocationOutput {
    envy: Vec<Vec<f64>>,
    ef: bool,
    ef1: bool,
    pareto: ParetoVerdict,
}

/// Envy matrix, EF, EF1 and a brute-force Pareto verdict for an
/// assignment of items to agents.
pub fn check_allocation_json(input: &str) -> Result<String, String> {
    let input: AllocationInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let alloc = IntegralAllocation::from_assignments(input.n, &input.owners, input.items)
        .map_err(|e| e.to_string())?;
    let report = envy_report(&alloc);
    let pareto = is_pareto_efficient_integral(
        &alloc,
        ParetoMode::Brute {
            cap: DEMO_BRUTE_CAP,
        },
    )
    .map_err(|e| e.to_string())?;
    let out = AllocationOutput {
        envy: report.matrix,
        ef: report.ef,
        ef1: report.ef1,
        pareto,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn solve_market(input: &str) -> Result<String, JsError> {
    solve_market_json(input).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(input: &str) -> Result<String, JsError> {
    simulate_json(input).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn check_allocation(input: &str) -> Result<String, JsError> {
    check_allocation_json(input).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn market_with_unequal_budgets() {
        let out = solve_market_json(r#"{"values": [[1, 1], [0.5, 1], [1, 0.5]]}"#).unwrap();
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["equal_budgets"]["edges"].as_array().unwrap().len(), 2);
        assert!(v["cisef"]["edges"].as_array().unwrap().is_empty());
        assert!(!v["steps"].as_array().unwrap().is_empty());
        let e: Vec<f64> = serde_json::from_value(v["cisef"]["e"].clone()).unwrap();
        assert!(e[0] > e[1]);
    }

    #[test]
    fn simulation_reports_checkpoints() {
        let input = r#"{"probs": [0.5, 0.5], "values": [[1, 0], [0.5, 1]], "policy": "pocr", "rounds": 100, "seed": 1}"#;
        let v: Value = serde_json::from_str(&simulate_json(input).unwrap()).unwrap();
        let t: Vec<usize> = serde_json::from_value(v["t"].clone()).unwrap();
        assert_eq!(t, vec![1, 2, 4, 8, 16, 32, 64, 100]);
        assert_eq!(v["max_envy"].as_array().unwrap().len(), t.len());
    }

    #[test]
    fn simulation_limits_rounds() {
        let input =
            r#"{"probs": [1], "values": [[1]], "policy": "uniform", "rounds": 1000000, "seed": 1}"#;
        assert!(simulate_json(input).is_err());
    }

    #[test]
    fn dominated_allocation() {
        let input =
            r#"{"n": 2, "owners": [1, 0, 0], "items": [[0.9, 0.51], [0.1, 0.49], [0.1, 0.49]]}"#;
        let v: Value = serde_json::from_str(&check_allocation_json(input).unwrap()).unwrap();
        assert_eq!(v["pareto"]["verdict"], "dominated");
        assert_eq!(v["ef1"], true);
    }

    #[test]
    fn bad_input_is_an_error_message() {
        assert!(solve_market_json("[]").is_err());
        assert!(check_allocation_json(r#"{"n": 2, "owners": [5], "items": [[1, 1]]}"#).is_err());
    }
}
