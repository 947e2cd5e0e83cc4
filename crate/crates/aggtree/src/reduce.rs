//! Exact simulation of one Reduce operation for a given placement of
//! aggregation switches.
//!
//! Message counts are computed bottom-up: a red node forwards everything it
//! receives plus its own load, a blue node folds any positive inflow into a
//! single outgoing message.

use std::collections::BTreeSet;
use std::io;

use thiserror::Error;

use crate::topology::{NodeId, TreeNetwork};

#[derive(Debug, Error, PartialEq)]
pub enum ReduceError {
    #[error("blue node {0} is outside the network's available set")]
    InvalidPlacement(NodeId),
}

/// A set of blue (aggregating) switches.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Placement {
    blue: BTreeSet<NodeId>,
}

impl Placement {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(blue: BTreeSet<NodeId>) -> Self {
        Placement { blue }
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.blue.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.blue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blue.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.blue.iter().copied()
    }

    pub fn as_set(&self) -> &BTreeSet<NodeId> {
        &self.blue
    }
}

impl FromIterator<NodeId> for Placement {
    fn from_iter<T: IntoIterator<Item = NodeId>>(iter: T) -> Self {
        Placement { blue: iter.into_iter().collect() }
    }
}

/// Message counts and congestions per edge, with the network maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct CongestionReport {
    /// Messages on the edge out of each node.
    pub msg: Vec<u64>,
    /// Congestion of the edge out of each node: msg · τ.
    pub congestion: Vec<f64>,
    /// Maximum congestion over all edges, including (r, d).
    pub network_congestion: f64,
    /// Child endpoint of the most congested edge. Ties break towards the
    /// deepest edge, then the smallest node id.
    pub argmax_edge: NodeId,
}

/// Number of messages on each edge during one Reduce, indexed by the edge's
/// child endpoint.
pub fn link_loads(net: &TreeNetwork, placement: &Placement) -> Result<Vec<u64>, ReduceError> {
    if let Some(v) = placement.iter().find(|&v| !net.is_available(v)) {
        return Err(ReduceError::InvalidPlacement(v));
    }
    Ok(link_loads_unchecked(net, placement))
}

/// As `link_loads` without the availability check. Used by solvers that
/// evaluate hypothetical placements on restricted availability sets.
pub(crate) fn link_loads_unchecked(net: &TreeNetwork, placement: &Placement) -> Vec<u64> {
    let mut msg = vec![0u64; net.len()];
    for &v in net.post_order() {
        let inflow: u64 =
            net.load(v) + net.children(v).iter().map(|&c| msg[c]).sum::<u64>();
        msg[v] = if placement.contains(v) {
            u64::from(inflow > 0)
        } else {
            inflow
        };
    }
    msg
}

pub fn congestion_report(
    net: &TreeNetwork,
    placement: &Placement,
) -> Result<CongestionReport, ReduceError> {
    let msg = link_loads(net, placement)?;
    Ok(report_from_loads(net, msg))
}

pub(crate) fn report_from_loads(net: &TreeNetwork, msg: Vec<u64>) -> CongestionReport {
    let congestion: Vec<f64> = (0..net.len()).map(|v| msg[v] as f64 * net.tau(v)).collect();
    let mut argmax = net.root();
    for v in 0..net.len() {
        let better = congestion[v] > congestion[argmax]
            || (congestion[v] == congestion[argmax]
                && (net.depth(v) > net.depth(argmax)
                    || (net.depth(v) == net.depth(argmax) && v < argmax)));
        if better {
            argmax = v;
        }
    }
    CongestionReport {
        network_congestion: congestion[argmax],
        argmax_edge: argmax,
        msg,
        congestion,
    }
}

impl CongestionReport {
    /// One row per edge (child_id, parent_id, msg, rate, congestion) plus a
    /// summary row carrying the network congestion.
    pub fn write_csv<W: io::Write>(&self, net: &TreeNetwork, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["child_id", "parent_id", "msg", "rate", "congestion"])?;
        for v in 0..net.len() {
            let parent = match net.parent(v) {
                Some(p) => p.to_string(),
                None => "d".to_string(),
            };
            w.write_record([
                v.to_string(),
                parent,
                self.msg[v].to_string(),
                format!("{:?}", net.rate(v)),
                format!("{:?}", self.congestion[v]),
            ])?;
        }
        w.write_record([
            "summary".to_string(),
            String::new(),
            String::new(),
            String::new(),
            format!("{:?}", self.network_congestion),
        ])?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::demo_tree;

    #[test]
    fn top_placement_matches_worked_example() {
        let net = demo_tree();
        // blue: root and the aggregator over the (5,5) leaves
        let placement: Placement = [0, 1].into_iter().collect();
        let msg = link_loads(&net, &placement).unwrap();
        assert_eq!(msg[1], 1);
        assert_eq!(msg[2], 8);
        assert_eq!(msg[0], 1);
        assert_eq!(msg[3], 5);
        assert_eq!(msg[4], 5);
        assert_eq!(msg[5], 2);
        assert_eq!(msg[6], 6);
        let report = congestion_report(&net, &placement).unwrap();
        assert_eq!(report.network_congestion, 8.0);
        assert_eq!(report.argmax_edge, 2);
    }

    #[test]
    fn all_blue_sends_one_message_per_edge() {
        let net = demo_tree();
        let placement: Placement = (0..7).collect();
        let msg = link_loads(&net, &placement).unwrap();
        assert!(msg.iter().all(|&m| m == 1));
        let report = congestion_report(&net, &placement).unwrap();
        assert_eq!(report.network_congestion, 1.0);
    }

    #[test]
    fn all_red_forwards_total_load() {
        let net = demo_tree();
        let report = congestion_report(&net, &Placement::empty()).unwrap();
        assert_eq!(report.msg[net.root()], 18);
        assert_eq!(report.network_congestion, 18.0);
    }

    #[test]
    fn optimal_two_blue_placement_reaches_five() {
        let net = demo_tree();
        // aggregate the (5,5) pair and the load-6 leaf
        let placement: Placement = [1, 6].into_iter().collect();
        let report = congestion_report(&net, &placement).unwrap();
        assert_eq!(report.network_congestion, 5.0);
    }

    #[test]
    fn zero_inflow_blue_node_emits_nothing() {
        let net = demo_tree().with_loads(vec![0; 7]).unwrap();
        let placement: Placement = [1].into_iter().collect();
        let msg = link_loads(&net, &placement).unwrap();
        assert!(msg.iter().all(|&m| m == 0));
    }

    #[test]
    fn rejects_unavailable_blue_node() {
        let net = demo_tree().with_available(&[0, 1].into_iter().collect()).unwrap();
        let placement: Placement = [2].into_iter().collect();
        assert_eq!(
            link_loads(&net, &placement).unwrap_err(),
            ReduceError::InvalidPlacement(2)
        );
    }

    #[test]
    fn csv_has_edge_rows_and_summary() {
        let net = demo_tree();
        let report = congestion_report(&net, &Placement::empty()).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&net, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 7 + 1);
        assert!(lines[0].starts_with("child_id"));
        assert!(lines.last().unwrap().starts_with("summary"));
    }
}
