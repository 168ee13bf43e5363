//! Solvers for adaptive contracts: a principal commits to an inspection policy
//! plus payments on coarse signals and on refined (inspected) outcomes, and an
//! agent best-responds with a hidden costly action.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: settings, contracts, structural predicates and the
//!   payment/reward accounting the agent and principal use.
//! * [`lp`]: a dense two-phase simplex solver with dual values.
//! * [`combined`]: flattening of the two-stage signal/outcome tree into a
//!   single distribution for a fixed inspection policy.
//! * [`minpay`]: the cheapest contract for a fixed policy and target action,
//!   including the randomized-inspection constraint families.
//! * [`deterministic`]: optimal 0/1 inspection policies (exhaustive,
//!   few-actions and independent-evaluation algorithms).
//! * [`randomized`]: committed/uncommitted mixed inspection.
//! * [`generators`]: parametric instance families.
//! * [`experiments`]: the benchmark-derived case studies and sweeps.

pub mod combined;
pub mod deterministic;
mod error;
pub mod experiments;
pub mod generators;
pub mod lp;
pub mod minpay;
pub mod model;
pub mod randomized;

pub use error::{ContractError, Result};
pub use model::{Contract, Setting, ValidationReport};

/// Absolute tolerance used when comparing probabilities.
pub const PROB_TOL: f64 = 1e-9;
/// Absolute tolerance used when comparing monetary amounts.
pub const MONEY_TOL: f64 = 1e-6;
