//! Online fair division of indivisible items driven by Fisher-market
//! equilibria.
//!
//! The pipeline: a [`TypeDistribution`](instance::TypeDistribution) is scaled
//! into an [`OfflineInstance`](instance::OfflineInstance), the market module
//! solves it, the `cisef` module refines the equilibrium into a clique
//! identical strongly envy-free allocation, and the online allocators round
//! it item by item. `metrics` measures what comes out.

pub mod adversary;
pub mod cisef;
pub mod error;
pub mod flow;
pub mod instance;
pub mod io;
pub mod market;
pub mod metrics;
pub mod online;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar, Tol};
