//! Shared fixtures for unit tests.

use crate::topology::TreeNetwork;

/// The 7-switch complete binary tree used as the running example: unit
/// rates, every node available, leaf loads 5, 5, 2, 6 on nodes 3..=6.
///
/// With budget 2 the baselines reach congestion 8 (top), 9 (max), and
/// 6 (level), while the optimum is 5.
pub fn demo_tree() -> TreeNetwork {
    let parents = vec![None, Some(0), Some(0), Some(1), Some(1), Some(2), Some(2)];
    let rates = vec![1.0; 7];
    let loads = vec![0, 0, 0, 5, 5, 2, 6];
    TreeNetwork::build(&parents, &rates, &loads, &(0..7).collect()).unwrap()
}
