//! Fairness and efficiency verdicts for integral and fractional allocations.

mod audit;
mod envy;
mod pareto;
mod summary;

pub use audit::{is_cisef, CisefAudit};
pub use envy::{envy_report, EnvyReport, ENVY_TOL};
pub use pareto::{
    alpha_pareto_improvable, is_pareto_efficient_integral, ParetoMode, ParetoVerdict,
    BRUTE_FORCE_CAP, UTILITY_TOL,
};
pub use summary::{envy_scale, envy_trace_summary, CheckpointStats};
