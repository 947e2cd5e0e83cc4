//! Congestion-aware placement of in-network aggregation switches on
//! weighted tree networks.
//!
//! The crate models a Reduce operation over a tree of switches where a
//! bounded number of switches may aggregate their subtree's messages into
//! one. It provides:
//!
//! - [`topology`]: tree construction, validation, generators, and a plain
//!   text interchange format,
//! - [`reduce`]: exact per-link message counts and congestion for a given
//!   placement,
//! - [`smc`]: the optimal bounded-placement solver (feasibility dynamic
//!   program, traceback, and outer search on the congestion bound),
//! - [`strategies`]: baseline heuristics and a brute-force reference,
//! - [`multiworkload`]: online allocation over workload sequences under
//!   per-switch aggregation capacities,
//! - [`harness`]: a configuration-driven experiment runner with CSV
//!   output.

pub mod harness;
pub mod multiworkload;
pub mod reduce;
pub mod smc;
pub mod strategies;
pub mod topology;

#[cfg(test)]
pub(crate) mod testutil;

pub use reduce::{congestion_report, link_loads, CongestionReport, Placement};
pub use smc::{color, gather, solve, BetaTable, Count};
pub use strategies::StrategyKind;
pub use topology::{LoadSpec, NodeId, RateScheme, TreeNetwork};
