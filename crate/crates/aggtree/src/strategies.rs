//! Baseline placement strategies and the exhaustive reference solver.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reduce::{congestion_report, Placement};
use crate::smc;
use crate::topology::{NodeId, TreeNetwork};

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("the Level strategy requires a complete binary tree")]
    NotCompleteBinaryTree,
    #[error("instance too large to enumerate: {subsets} subsets exceed the cap of {cap}")]
    InstanceTooLarge { subsets: u128, cap: u128 },
}

/// Default cap on the number of subsets brute force will enumerate.
pub const DEFAULT_ENUMERATION_CAP: u128 = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Top,
    Max,
    Level,
    AllRed,
    AllBlue,
    Smc,
    BruteForce,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Top => "top",
            StrategyKind::Max => "max",
            StrategyKind::Level => "level",
            StrategyKind::AllRed => "allred",
            StrategyKind::AllBlue => "allblue",
            StrategyKind::Smc => "smc",
            StrategyKind::BruteForce => "oracle",
        }
    }
}

/// Runs one strategy against a restricted availability set.
pub fn place(
    net: &TreeNetwork,
    k: usize,
    lambda: &BTreeSet<NodeId>,
    kind: StrategyKind,
) -> Result<Placement, StrategyError> {
    match kind {
        StrategyKind::Top => Ok(top_k(net, k, lambda)),
        StrategyKind::Max => Ok(max_k(net, k, lambda)),
        StrategyKind::Level => level_k(net, k, lambda),
        StrategyKind::AllRed => Ok(Placement::empty()),
        StrategyKind::AllBlue => Ok(all_blue(net, lambda)),
        StrategyKind::Smc => Ok(smc::solve_restricted(net, k, lambda).0),
        StrategyKind::BruteForce => {
            brute_force(net, k, lambda, DEFAULT_ENUMERATION_CAP).map(|(p, _)| p)
        }
    }
}

fn eligible(net: &TreeNetwork, lambda: &BTreeSet<NodeId>) -> Vec<NodeId> {
    lambda.iter().copied().filter(|&v| net.is_available(v)).collect()
}

/// The `k` available nodes closest to the root, ties by smallest depth then
/// smallest id.
pub fn top_k(net: &TreeNetwork, k: usize, lambda: &BTreeSet<NodeId>) -> Placement {
    let mut nodes = eligible(net, lambda);
    nodes.sort_by_key(|&v| (net.depth(v), v));
    nodes.into_iter().take(k).collect()
}

/// The `k` available nodes with the largest direct load, ties by smallest
/// id.
pub fn max_k(net: &TreeNetwork, k: usize, lambda: &BTreeSet<NodeId>) -> Placement {
    let mut nodes = eligible(net, lambda);
    nodes.sort_by_key(|&v| (std::cmp::Reverse(net.load(v)), v));
    nodes.into_iter().take(k).collect()
}

/// The deepest whole level of a complete binary tree whose size fits the
/// budget, intersected with the availability set. Leftover budget stays
/// unused.
pub fn level_k(
    net: &TreeNetwork,
    k: usize,
    lambda: &BTreeSet<NodeId>,
) -> Result<Placement, StrategyError> {
    if !net.is_complete_binary() {
        return Err(StrategyError::NotCompleteBinaryTree);
    }
    if k == 0 {
        return Ok(Placement::empty());
    }
    // level depths have sizes 1, 2, 4, ...: the deepest level of size ≤ k
    let target_depth = (usize::BITS - 1 - k.leading_zeros()) as usize;
    let max_depth = (0..net.len()).map(|v| net.depth(v)).max().unwrap_or(0);
    let depth = target_depth.min(max_depth);
    Ok((0..net.len())
        .filter(|&v| net.depth(v) == depth && net.is_available(v) && lambda.contains(&v))
        .collect())
}

/// Colors every available node; a bound on achievable congestion rather
/// than a budgeted contender.
pub fn all_blue(net: &TreeNetwork, lambda: &BTreeSet<NodeId>) -> Placement {
    eligible(net, lambda).into_iter().collect()
}

/// Exhaustive minimum over all subsets of the availability set with at most
/// `k` nodes. Subsets are visited by ascending size then lexicographic
/// order; among minimizers the lexicographically smallest survives.
pub fn brute_force(
    net: &TreeNetwork,
    k: usize,
    lambda: &BTreeSet<NodeId>,
    cap: u128,
) -> Result<(Placement, f64), StrategyError> {
    let nodes = eligible(net, lambda);
    let k = k.min(nodes.len());
    let mut subsets: u128 = 0;
    for i in 0..=k {
        subsets += binomial(nodes.len() as u128, i as u128);
    }
    if subsets > cap {
        return Err(StrategyError::InstanceTooLarge { subsets, cap });
    }

    let mut best: Option<(f64, Vec<NodeId>)> = None;
    let mut current = Vec::new();
    for size in 0..=k {
        combinations(&nodes, size, 0, &mut current, &mut |subset| {
            let placement: Placement = subset.iter().copied().collect();
            let psi = congestion_report(net, &placement)
                .expect("eligible nodes are available")
                .network_congestion;
            let replace = match &best {
                None => true,
                Some((b, u)) => psi < *b || (psi == *b && subset < u.as_slice()),
            };
            if replace {
                best = Some((psi, subset.to_vec()));
            }
        });
    }
    let (psi, subset) = best.expect("the empty placement is always evaluated");
    Ok((subset.into_iter().collect(), psi))
}

fn combinations(
    nodes: &[NodeId],
    size: usize,
    start: usize,
    current: &mut Vec<NodeId>,
    visit: &mut impl FnMut(&[NodeId]),
) {
    if current.len() == size {
        visit(current);
        return;
    }
    let needed = size - current.len();
    for idx in start..nodes.len() {
        if nodes.len() - idx < needed {
            break;
        }
        current.push(nodes[idx]);
        combinations(nodes, size, idx + 1, current, visit);
        current.pop();
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let mut result: u128 = 1;
    for i in 0..k {
        result = result.saturating_mul(n - i) / (i + 1);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::demo_tree;

    fn all_nodes(net: &TreeNetwork) -> BTreeSet<NodeId> {
        net.available_nodes()
    }

    #[test]
    fn top_two_reaches_eight_on_demo() {
        let net = demo_tree();
        let placement = top_k(&net, 2, &all_nodes(&net));
        assert_eq!(placement, [0, 1].into_iter().collect());
        let psi = congestion_report(&net, &placement).unwrap().network_congestion;
        assert_eq!(psi, 8.0);
    }

    #[test]
    fn top_zero_is_empty() {
        let net = demo_tree();
        assert!(top_k(&net, 0, &all_nodes(&net)).is_empty());
    }

    #[test]
    fn top_on_chain_picks_root() {
        let parents = vec![None, Some(0), Some(1)];
        let net = TreeNetwork::build(
            &parents,
            &[1.0; 3],
            &[0, 0, 3],
            &(0..3).collect(),
        )
        .unwrap();
        assert_eq!(top_k(&net, 1, &net.available_nodes()), [0].into_iter().collect());
    }

    #[test]
    fn max_two_reaches_nine_on_demo() {
        let net = demo_tree();
        let placement = max_k(&net, 2, &all_nodes(&net));
        // load-6 leaf plus the smallest-id load-5 leaf
        assert_eq!(placement, [3, 6].into_iter().collect());
        let psi = congestion_report(&net, &placement).unwrap().network_congestion;
        assert_eq!(psi, 9.0);
    }

    #[test]
    fn max_with_equal_loads_uses_id_tiebreak() {
        let net = demo_tree().with_loads(vec![1; 7]).unwrap();
        let placement = max_k(&net, 2, &net.available_nodes());
        assert_eq!(placement, [0, 1].into_iter().collect());
    }

    #[test]
    fn max_with_large_budget_takes_everything() {
        let net = demo_tree();
        assert_eq!(max_k(&net, 99, &all_nodes(&net)).len(), 7);
    }

    #[test]
    fn level_two_reaches_six_on_demo() {
        let net = demo_tree();
        let placement = level_k(&net, 2, &all_nodes(&net)).unwrap();
        assert_eq!(placement, [1, 2].into_iter().collect());
        let psi = congestion_report(&net, &placement).unwrap().network_congestion;
        assert_eq!(psi, 6.0);
    }

    #[test]
    fn level_one_is_the_root() {
        let net = demo_tree();
        assert_eq!(
            level_k(&net, 1, &all_nodes(&net)).unwrap(),
            [0].into_iter().collect()
        );
    }

    #[test]
    fn level_three_falls_back_to_size_two_level() {
        let net = demo_tree();
        let placement = level_k(&net, 3, &all_nodes(&net)).unwrap();
        assert_eq!(placement, [1, 2].into_iter().collect());
    }

    #[test]
    fn level_rejects_non_complete_trees() {
        let parents = vec![None, Some(0), Some(1)];
        let net = TreeNetwork::build(
            &parents,
            &[1.0; 3],
            &[0; 3],
            &(0..3).collect(),
        )
        .unwrap();
        assert_eq!(
            level_k(&net, 1, &net.available_nodes()).unwrap_err(),
            StrategyError::NotCompleteBinaryTree
        );
    }

    #[test]
    fn brute_force_finds_five_on_demo() {
        let net = demo_tree();
        let (placement, psi) =
            brute_force(&net, 2, &all_nodes(&net), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(psi, 5.0);
        assert!(placement.len() <= 2);
    }

    #[test]
    fn brute_force_zero_budget_is_all_red() {
        let net = demo_tree();
        let (placement, psi) =
            brute_force(&net, 0, &all_nodes(&net), DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(placement.is_empty());
        assert_eq!(psi, 18.0);
    }

    #[test]
    fn brute_force_honors_the_cap() {
        let net = TreeNetwork::complete_binary(
            64,
            crate::topology::RateScheme::constant(),
            &crate::topology::LoadSpec::uniform_default(),
            0,
        )
        .unwrap();
        assert!(matches!(
            brute_force(&net, 8, &net.available_nodes(), 1000),
            Err(StrategyError::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn strategies_never_beat_the_solver_on_demo() {
        let net = demo_tree();
        let lambda = all_nodes(&net);
        let optimum = smc::solve(&net, 2).1;
        for kind in [StrategyKind::Top, StrategyKind::Max, StrategyKind::Level] {
            let placement = place(&net, 2, &lambda, kind).unwrap();
            let psi = congestion_report(&net, &placement).unwrap().network_congestion;
            assert!(psi >= optimum);
        }
    }

    #[test]
    fn strategies_respect_restricted_availability() {
        let net = demo_tree();
        let lambda: BTreeSet<NodeId> = [3, 4, 5, 6].into_iter().collect();
        for kind in [StrategyKind::Top, StrategyKind::Max, StrategyKind::Smc] {
            let placement = place(&net, 2, &lambda, kind).unwrap();
            assert!(placement.iter().all(|v| lambda.contains(&v)));
            assert!(placement.len() <= 2);
        }
    }
}
