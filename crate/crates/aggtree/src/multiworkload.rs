//! Online allocation across a sequence of workloads under per-switch
//! aggregation capacities.
//!
//! Each workload is settled before the next one arrives: the strategy sees
//! only the switches with positive residual capacity, its blue nodes each
//! burn one capacity unit, and link loads accumulate across steps.

use std::collections::BTreeSet;
use std::io;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::reduce::{link_loads, Placement};
use crate::strategies::{self, StrategyKind};
use crate::topology::{
    generate_loads_with, LoadSpec, NodeId, TopologyError, TreeNetwork,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Strategy(#[from] strategies::StrategyError),
    #[error(transparent)]
    Reduce(#[from] crate::reduce::ReduceError),
}

/// Per-switch aggregation capacities and what remains of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityState {
    capacity: Vec<u64>,
    residual: Vec<u64>,
}

impl CapacityState {
    pub fn uniform(n: usize, capacity: u64) -> Self {
        CapacityState { capacity: vec![capacity; n], residual: vec![capacity; n] }
    }

    pub fn new(capacity: Vec<u64>) -> Self {
        CapacityState { residual: capacity.clone(), capacity }
    }

    pub fn capacity(&self, v: NodeId) -> u64 {
        self.capacity[v]
    }

    pub fn residual(&self, v: NodeId) -> u64 {
        self.residual[v]
    }

    pub fn residual_total(&self) -> u64 {
        self.residual.iter().sum()
    }

    /// Switches that may still take on a workload.
    pub fn available_at(&self) -> BTreeSet<NodeId> {
        (0..self.residual.len()).filter(|&v| self.residual[v] > 0).collect()
    }

    fn consume(&mut self, placement: &Placement) {
        for v in placement.iter() {
            debug_assert!(self.residual[v] > 0, "blue node without residual capacity");
            self.residual[v] -= 1;
        }
    }
}

/// One per-step record of a workload run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub placement: Placement,
    /// Network congestion of this step alone.
    pub step_congestion: f64,
    /// Max over edges of the accumulated message count times τ, up to and
    /// including this step.
    pub cumulative_congestion: f64,
    /// The same quantity divided by its value under all-red placements.
    pub normalized_cumulative: f64,
    pub residual_total: u64,
}

/// The full outcome of running a strategy over a workload sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadRun {
    pub strategy: StrategyKind,
    pub steps: Vec<StepRecord>,
    /// Accumulated message count per edge over all steps.
    pub cumulative_msg: Vec<u64>,
    /// Accumulated message count per edge had every step run all-red.
    pub allred_cumulative_msg: Vec<u64>,
    pub final_state: CapacityState,
}

impl WorkloadRun {
    pub fn cumulative_congestion(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cumulative_congestion)
    }

    pub fn normalized_cumulative(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.normalized_cumulative)
    }

    /// CSV rows: t, strategy, step_psi, cumulative_psi,
    /// normalized_cumulative_psi, residual_total.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "t",
            "strategy",
            "step_psi",
            "cumulative_psi",
            "normalized_cumulative_psi",
            "residual_total",
        ])?;
        for (t, step) in self.steps.iter().enumerate() {
            w.write_record([
                t.to_string(),
                self.strategy.name().to_string(),
                format!("{:?}", step.step_congestion),
                format!("{:?}", step.cumulative_congestion),
                format!("{:?}", step.normalized_cumulative),
                step.residual_total.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn max_weighted(net: &TreeNetwork, msg: &[u64]) -> f64 {
    (0..net.len())
        .map(|v| msg[v] as f64 * net.tau(v))
        .fold(0.0, f64::max)
}

/// Runs `strategy` over the workload sequence, decrementing residual
/// capacity for every blue assignment and accumulating link loads.
pub fn run_sequence(
    net: &TreeNetwork,
    workloads: &[Vec<u64>],
    k: usize,
    capacity: CapacityState,
    strategy: StrategyKind,
) -> Result<WorkloadRun, RunError> {
    let mut state = capacity;
    let mut cumulative = vec![0u64; net.len()];
    let mut allred_cumulative = vec![0u64; net.len()];
    let mut steps = Vec::with_capacity(workloads.len());
    for loads in workloads {
        let net_t = net.with_loads(loads.clone())?;
        let lambda_t: BTreeSet<NodeId> = state
            .available_at()
            .into_iter()
            .filter(|&v| net.is_available(v))
            .collect();
        let placement = strategies::place(&net_t, k, &lambda_t, strategy)?;
        let restricted = net_t.with_available(&lambda_t)?;
        let msg = link_loads(&restricted, &placement)?;
        let allred = link_loads(&net_t, &Placement::empty())?;
        for v in 0..net.len() {
            cumulative[v] += msg[v];
            allred_cumulative[v] += allred[v];
        }
        state.consume(&placement);
        let step_congestion = max_weighted(net, &msg);
        let cumulative_congestion = max_weighted(net, &cumulative);
        let allred_congestion = max_weighted(net, &allred_cumulative);
        steps.push(StepRecord {
            placement,
            step_congestion,
            cumulative_congestion,
            normalized_cumulative: if allred_congestion > 0.0 {
                cumulative_congestion / allred_congestion
            } else {
                0.0
            },
            residual_total: state.residual_total(),
        });
    }
    Ok(WorkloadRun {
        strategy,
        steps,
        cumulative_msg: cumulative,
        allred_cumulative_msg: allred_cumulative,
        final_state: state,
    })
}

/// Draws `count` workloads, each independently uniform or power-law with
/// probability one half, targeting the leaves of `net`. Internal nodes get
/// load zero.
pub fn workload_sequence(
    net: &TreeNetwork,
    uniform: &LoadSpec,
    powerlaw: &LoadSpec,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<u64>>, TopologyError> {
    let leaves: Vec<NodeId> = (0..net.len()).filter(|&v| net.is_leaf(v)).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut workloads = Vec::with_capacity(count);
    for _ in 0..count {
        let spec = if rng.random::<bool>() { uniform } else { powerlaw };
        let leaf_loads = generate_loads_with(spec, leaves.len(), &mut rng)?;
        let mut loads = vec![0u64; net.len()];
        for (i, &v) in leaves.iter().enumerate() {
            loads[v] = leaf_loads[i];
        }
        workloads.push(loads);
    }
    Ok(workloads)
}
