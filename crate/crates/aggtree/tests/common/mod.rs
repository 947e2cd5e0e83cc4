//! Fixtures and independent reference computations shared by the
//! integration suites.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use aggtree::topology::{NodeId, TreeNetwork};
use aggtree::Placement;

/// The 7-switch complete binary tree used as the running example: unit
/// rates, every node available, leaf loads 5, 5, 2, 6 on nodes 3..=6.
pub fn demo_tree() -> TreeNetwork {
    let parents = vec![None, Some(0), Some(0), Some(1), Some(1), Some(2), Some(2)];
    let rates = vec![1.0; 7];
    let loads = vec![0, 0, 0, 5, 5, 2, 6];
    TreeNetwork::build(&parents, &rates, &loads, &(0..7).collect()).unwrap()
}

/// A random rooted tree with `max_nodes` switches at most: node v > 0 gets
/// a parent drawn among smaller ids, loads are uniform on [0, 9], rates
/// come from {1, 2, 1.5^j}, and availability is a random subset.
pub fn random_net(rng: &mut ChaCha12Rng, max_nodes: usize) -> TreeNetwork {
    let n = rng.random_range(1..=max_nodes);
    let mut parents = vec![None];
    for v in 1..n {
        parents.push(Some(rng.random_range(0..v)));
    }
    let rates: Vec<f64> = (0..n)
        .map(|_| match rng.random_range(0..3) {
            0 => 1.0,
            1 => 2.0,
            _ => 1.5f64.powi(rng.random_range(1..=4)),
        })
        .collect();
    let loads: Vec<u64> = (0..n).map(|_| rng.random_range(0..=9)).collect();
    let available: BTreeSet<NodeId> = (0..n).filter(|_| rng.random::<bool>()).collect();
    TreeNetwork::build(&parents, &rates, &loads, &available).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// All nodes in the subtree rooted at `v`.
pub fn subtree_nodes(net: &TreeNetwork, v: NodeId) -> Vec<NodeId> {
    let mut nodes = Vec::new();
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        nodes.push(u);
        stack.extend_from_slice(net.children(u));
    }
    nodes
}

/// Messages on every edge of the subtree rooted at `v` (including the edge
/// out of `v`) for a given blue set, computed directly from the forwarding
/// rules.
fn subtree_msgs(net: &TreeNetwork, v: NodeId, blue: &BTreeSet<NodeId>) -> Vec<(NodeId, u64)> {
    fn walk(
        net: &TreeNetwork,
        u: NodeId,
        blue: &BTreeSet<NodeId>,
        out: &mut Vec<(NodeId, u64)>,
    ) -> u64 {
        let mut inflow = net.load(u);
        for &c in net.children(u) {
            inflow += walk(net, c, blue, out);
        }
        let msg = if blue.contains(&u) { u64::from(inflow > 0) } else { inflow };
        out.push((u, msg));
        msg
    }
    let mut out = Vec::new();
    walk(net, v, blue, &mut out);
    out
}

/// Brute-force value of the minimum message count leaving `v` over all
/// placements of at most `budget` blue nodes inside its subtree, subject to
/// every subtree edge (including the one out of `v`) staying within
/// `bound`. `None` means no placement is feasible.
pub fn beta_oracle(net: &TreeNetwork, v: NodeId, budget: usize, bound: f64) -> Option<u64> {
    let candidates: Vec<NodeId> = subtree_nodes(net, v)
        .into_iter()
        .filter(|&u| net.is_available(u))
        .collect();
    let mut best: Option<u64> = None;
    let budget = budget.min(candidates.len());
    for mask in 0u32..(1 << candidates.len()) {
        if (mask.count_ones() as usize) > budget {
            continue;
        }
        let blue: BTreeSet<NodeId> = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &u)| u)
            .collect();
        let msgs = subtree_msgs(net, v, &blue);
        let feasible = msgs.iter().all(|&(u, m)| m as f64 * net.tau(u) <= bound);
        if feasible {
            let out = msgs
                .iter()
                .find(|&&(u, _)| u == v)
                .map(|&(_, m)| m)
                .expect("v is part of its own subtree");
            best = Some(best.map_or(out, |b| b.min(out)));
        }
    }
    best
}

/// Network congestion of a placement, as a plain max over edge products.
pub fn psi(net: &TreeNetwork, placement: &Placement) -> f64 {
    aggtree::congestion_report(net, placement)
        .expect("placement must be valid")
        .network_congestion
}
