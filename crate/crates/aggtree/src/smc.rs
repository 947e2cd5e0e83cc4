//! Optimal placement of a bounded number of aggregation switches.
//!
//! The solver runs a feasibility search over congestion bounds. For a fixed
//! bound `X`, [`gather`] computes bottom-up, per node and budget, the
//! minimum number of messages that can leave the node while keeping every
//! edge of the (extended) subtree within the bound. [`color`] then walks
//! the tree top-down, splitting the budget over children along the argmin
//! of the same recurrences, and returns an actual placement. [`solve`] ties
//! the two together with a binary search on the bound, followed by a
//! tightening loop that walks down the grid of achievable congestion
//! values until the bound becomes infeasible, so the returned congestion is
//! the exact optimum rather than a grid value.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::reduce::{congestion_report, Placement};
use crate::topology::{NodeId, TreeNetwork};

#[derive(Debug, Error, PartialEq)]
pub enum SmcError {
    #[error("no placement of {budget} blue nodes fits congestion bound {bound}")]
    InfeasibleBound { budget: usize, bound: f64 },
}

/// A message count extended with an infeasibility sentinel. Addition
/// saturates at `Infinite`; `Infinite` compares greater than every finite
/// value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Count {
    Finite(u64),
    Infinite,
}

impl Count {
    pub fn is_finite(self) -> bool {
        matches!(self, Count::Finite(_))
    }

    pub fn add(self, other: Count) -> Count {
        match (self, other) {
            (Count::Finite(a), Count::Finite(b)) => Count::Finite(a + b),
            _ => Count::Infinite,
        }
    }

    /// Applies the congestion bound: the count survives only when its
    /// transmission over an edge with per-message time `tau` fits in `x`.
    fn bounded(self, tau: f64, x: f64) -> Count {
        match self {
            Count::Finite(m) if m as f64 * tau <= x => Count::Finite(m),
            _ => Count::Infinite,
        }
    }
}

/// The potential tables produced by [`gather`]. Child-prefix tables are
/// retained so the traceback can recover the budget splits.
#[derive(Debug, Clone)]
pub struct BetaTable {
    bound: f64,
    budget: usize,
    root: NodeId,
    /// `beta[v][i]`: minimum outgoing message count of `v` using at most
    /// `i` blue nodes inside its subtree.
    beta: Vec<Vec<Count>>,
    /// `prefix_red[v][m][i]`: as above restricted to the first `m + 1`
    /// children, with `v` forced red. Empty for leaves.
    prefix_red: Vec<Vec<Vec<Count>>>,
    /// `prefix_blue[v][m][i]`: with `v` forced blue; `i` counts `v` itself.
    prefix_blue: Vec<Vec<Vec<Count>>>,
}

impl BetaTable {
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn beta(&self, v: NodeId, i: usize) -> Count {
        self.beta[v][i.min(self.budget)]
    }

    /// Whether some placement of at most `i` blue nodes fits the bound.
    pub fn feasible(&self, i: usize) -> bool {
        self.beta[self.root][i.min(self.budget)].is_finite()
    }

    fn new(n: usize, root: NodeId, budget: usize, bound: f64) -> Self {
        BetaTable {
            bound,
            budget,
            root,
            beta: vec![vec![Count::Infinite; budget + 1]; n],
            prefix_red: vec![Vec::new(); n],
            prefix_blue: vec![Vec::new(); n],
        }
    }
}

/// Computes the potential tables for budget `k` under congestion bound `x`,
/// honoring the network's availability set.
pub fn gather(net: &TreeNetwork, k: usize, x: f64) -> BetaTable {
    let mut table = BetaTable::new(net.len(), net.root(), k, x);
    for &v in net.post_order() {
        let tau = net.tau(v);
        let avail = net.is_available(v);
        if net.is_leaf(v) {
            let red = Count::Finite(net.load(v)).bounded(tau, x);
            let blue = Count::Finite(1).bounded(tau, x);
            table.beta[v][0] = red;
            for i in 1..=k {
                table.beta[v][i] = if avail { red.min(blue) } else { red };
            }
            continue;
        }
        let children = net.children(v);
        let mut red_rows: Vec<Vec<Count>> = Vec::with_capacity(children.len());
        let mut blue_rows: Vec<Vec<Count>> = Vec::with_capacity(children.len());
        for (m, &c) in children.iter().enumerate() {
            let child_beta = &table.beta[c];
            let mut red = vec![Count::Infinite; k + 1];
            let mut blue = vec![Count::Infinite; k + 1];
            if m == 0 {
                for i in 0..=k {
                    red[i] = child_beta[i].add(Count::Finite(net.load(v))).bounded(tau, x);
                    // v going blue consumes one budget unit for v itself
                    if i >= 1
                        && avail
                        && child_beta[i - 1].is_finite()
                        && Count::Finite(1).bounded(tau, x).is_finite()
                    {
                        blue[i] = Count::Finite(1);
                    }
                }
            } else {
                let prev_red = &red_rows[m - 1];
                let prev_blue = &blue_rows[m - 1];
                for i in 0..=k {
                    let mut best = Count::Infinite;
                    for j in 0..=i {
                        best = best.min(prev_red[i - j].add(child_beta[j]));
                    }
                    red[i] = best.bounded(tau, x);
                    // i already counts v itself in the blue prefix, so the
                    // child may take at most i - 1 units.
                    if i >= 1 {
                        let feasible_split = (0..=i - 1).any(|j| {
                            prev_blue[i - j].is_finite() && child_beta[j].is_finite()
                        });
                        if feasible_split {
                            blue[i] = Count::Finite(1);
                        }
                    }
                }
            }
            red_rows.push(red);
            blue_rows.push(blue);
        }
        let last = children.len() - 1;
        for i in 0..=k {
            table.beta[v][i] = red_rows[last][i].min(blue_rows[last][i]);
        }
        table.prefix_red[v] = red_rows;
        table.prefix_blue[v] = blue_rows;
    }
    table
}

/// Traces a feasible placement of at most `k` blue nodes out of a gather
/// table. Budgets are split over children in reverse order along the
/// argmin of the gather recurrences, ties towards the smallest share.
pub fn color(net: &TreeNetwork, table: &BetaTable, k: usize) -> Result<Placement, SmcError> {
    let k = k.min(table.budget);
    if !table.beta[net.root()][k].is_finite() {
        return Err(SmcError::InfeasibleBound { budget: k, bound: table.bound });
    }
    let x = table.bound;
    let mut blue = BTreeSet::new();
    let mut stack: Vec<(NodeId, usize)> = vec![(net.root(), k)];
    while let Some((v, i)) = stack.pop() {
        let tau = net.tau(v);
        if net.is_leaf(v) {
            let red = Count::Finite(net.load(v)).bounded(tau, x);
            let b = Count::Finite(1).bounded(tau, x);
            if i > 0 && net.is_available(v) && b.is_finite() && b <= red {
                blue.insert(v);
            }
            continue;
        }
        let children = net.children(v);
        let last = children.len() - 1;
        let r = table.prefix_red[v][last][i];
        let b = table.prefix_blue[v][last][i];
        let is_blue = b.is_finite() && b <= r;
        if is_blue {
            blue.insert(v);
        }
        let mut remaining = i;
        for m in (1..children.len()).rev() {
            let child_beta = &table.beta[children[m]];
            let prev = if is_blue {
                &table.prefix_blue[v][m - 1]
            } else {
                &table.prefix_red[v][m - 1]
            };
            // a blue v keeps one unit for itself
            let j_max = if is_blue { remaining - 1 } else { remaining };
            let mut best: Option<(Count, usize)> = None;
            for j in 0..=j_max {
                let candidate = prev[remaining - j].add(child_beta[j]);
                if candidate.is_finite()
                    && best.map_or(true, |(value, _)| candidate < value)
                {
                    best = Some((candidate, j));
                }
            }
            let (_, j) = best.expect("finite prefix entry must admit a finite split");
            stack.push((children[m], j));
            remaining -= j;
        }
        let first_share = if is_blue { remaining - 1 } else { remaining };
        stack.push((children[0], first_share));
    }
    Ok(Placement::new(blue))
}

/// The exact C-BIC optimum: a placement of at most `k` available switches
/// minimizing the network congestion, together with that congestion.
pub fn solve(net: &TreeNetwork, k: usize) -> (Placement, f64) {
    let k = k.min(net.available_nodes().len());
    let total = net.total_load();
    if total == 0 {
        return (Placement::empty(), 0.0);
    }
    let step = 1.0 / net.max_rate();
    let mut upper = total as f64 / net.min_rate();
    // the all-red placement always fits the maximal bound; nudge past
    // float rounding if the product form lands a hair above the quotient
    while !gather(net, k, upper).feasible(k) {
        upper *= 1.0 + 1e-9;
    }

    // Phase 1: binary search on the step grid for the smallest feasible
    // bound.
    let mut lo = 0u64;
    let mut hi = (upper / step).ceil() as u64;
    while (hi as f64) * step < upper {
        hi += 1;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if gather(net, k, mid as f64 * step).feasible(k) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let table = gather(net, k, lo as f64 * step);
    let placement = color(net, &table, k).expect("grid point verified feasible");
    let mut best = placement;
    let mut achieved = congestion_report(net, &best)
        .expect("colored placement is within the availability set")
        .network_congestion;

    // Phase 2: the grid step can overshoot when rates are non-commensurate.
    // Walk down to the largest achievable congestion value strictly below
    // what the current placement achieves; stop when it turns infeasible.
    while let Some(next) = next_lower_value(net, total, achieved) {
        let table = gather(net, k, next);
        if !table.feasible(k) {
            break;
        }
        best = color(net, &table, k).expect("feasibility just checked");
        let report = congestion_report(net, &best)
            .expect("colored placement is within the availability set");
        debug_assert!(report.network_congestion < achieved);
        achieved = report.network_congestion;
    }
    (best, achieved)
}

/// Solves on a restricted availability set without mutating `net`.
pub fn solve_restricted(
    net: &TreeNetwork,
    k: usize,
    lambda: &BTreeSet<NodeId>,
) -> (Placement, f64) {
    let restricted: BTreeSet<NodeId> =
        lambda.iter().copied().filter(|&v| net.is_available(v)).collect();
    let net = net
        .with_available(&restricted)
        .expect("restricted availability references known nodes");
    solve(&net, k)
}

/// Largest value of the form m·τ(e), m ≤ total, strictly below `limit`, or
/// `None` when no positive candidate remains.
fn next_lower_value(net: &TreeNetwork, total: u64, limit: f64) -> Option<f64> {
    if limit <= 0.0 {
        return None;
    }
    let mut best: Option<f64> = None;
    for v in 0..net.len() {
        let tau = net.tau(v);
        let mut m = ((limit / tau).floor() as u64).min(total);
        let mut value = m as f64 * tau;
        while m > 0 && value >= limit {
            m -= 1;
            value = m as f64 * tau;
        }
        if value < limit && best.map_or(true, |b| value > b) {
            best = Some(value);
        }
    }
    best
}
