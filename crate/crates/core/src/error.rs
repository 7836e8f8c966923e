use thiserror::Error;

use crate::market::{KktReport, MarketSolution};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("solver did not converge after {iterations} iterations (best residual {:.3e})", .report.max_residual())]
    NonConvergence {
        iterations: usize,
        best: Box<MarketSolution<f64>>,
        report: KktReport,
    },

    #[error("rejected transfer: {0}")]
    InvalidTransfer(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "brute-force search too large: {leaves} leaves exceeds cap {cap}; use certificate mode"
    )]
    SearchTooLarge { leaves: f64, cap: f64 },

    #[error("adversary: {0}")]
    Adversary(String),

    #[error("allocator: {0}")]
    Allocator(String),

    #[error("exact reconstruction failed: {0}")]
    Exact(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
