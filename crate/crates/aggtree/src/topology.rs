//! Weighted tree networks and the generators used throughout the evaluation.
//!
//! A [`TreeNetwork`] is a rooted tree of switches. Every switch has exactly
//! one outgoing edge towards its parent; the root's outgoing edge leads to
//! the distinguished destination, so the number of edges equals the number
//! of switches. Edges are identified by their child endpoint.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("cycle detected through node {0}")]
    CycleDetected(NodeId),
    #[error("multiple nodes claim the destination as parent")]
    MultipleRoots,
    #[error("no node has the destination as parent")]
    NoRoot,
    #[error("missing rate for node {0}")]
    MissingRate(NodeId),
    #[error("non-positive rate {rate} on edge out of node {node}")]
    NonPositiveRate { node: NodeId, rate: f64 },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("leaf count {0} is not a power of two")]
    InvalidLeafCount(usize),
    #[error("empty load range [{lo}, {hi}]")]
    EmptyRange { lo: u64, hi: u64 },
    #[error("network file is malformed: {0}")]
    Malformed(String),
}

/// Per-level link rates, assigned by the edge's distance from the leaves.
///
/// Edges are numbered starting at 1 for leaf-adjacent edges. The root's
/// outgoing edge to the destination continues the progression one step
/// beyond the deepest in-tree edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "scheme")]
pub enum RateScheme {
    Constant,
    Linear {
        #[serde(default = "default_linear_step")]
        step: f64,
    },
    Exponential {
        #[serde(default = "default_exponential_base")]
        base: f64,
    },
}

fn default_linear_step() -> f64 {
    1.0
}

fn default_exponential_base() -> f64 {
    1.5
}

impl RateScheme {
    pub fn constant() -> Self {
        RateScheme::Constant
    }

    pub fn linear() -> Self {
        RateScheme::Linear { step: 1.0 }
    }

    pub fn exponential() -> Self {
        RateScheme::Exponential { base: 1.5 }
    }

    /// Rate of an edge at 1-based distance `level` from the leaves.
    pub fn edge_rate(&self, level: usize) -> f64 {
        match *self {
            RateScheme::Constant => 1.0,
            RateScheme::Linear { step } => 1.0 + step * (level.saturating_sub(1)) as f64,
            RateScheme::Exponential { base } => base.powi(level as i32),
        }
    }
}

/// Exponent of the discrete power-law load distribution p(x) ∝ x^(-α) on
/// {1..=63}, calibrated so the mean is 5.0. See `powerlaw_exponent` for the
/// calibration procedure; the constant is frozen here so generated loads do
/// not depend on floating-point quirks of the calibration search.
pub const POWERLAW_ALPHA: f64 = 1.626_430_366_148_335;

/// Bounds of the power-law load range.
pub const POWERLAW_RANGE: (u64, u64) = (1, 63);

/// Mean of p(x) ∝ x^(-alpha) on lo..=hi.
fn powerlaw_mean(alpha: f64, lo: u64, hi: u64) -> f64 {
    let mut z = 0.0;
    let mut s = 0.0;
    for x in lo..=hi {
        let w = (x as f64).powf(-alpha);
        z += w;
        s += w * x as f64;
    }
    s / z
}

/// Calibrates the power-law exponent by bisection so the distribution mean
/// hits `target_mean`. The mean is strictly decreasing in alpha.
pub fn powerlaw_exponent(lo: u64, hi: u64, target_mean: f64) -> f64 {
    let (mut a, mut b) = (1e-6, 16.0);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if powerlaw_mean(mid, lo, hi) > target_mean {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// How loads are assigned to switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum LoadSpec {
    /// i.i.d. integers uniform on [lo, hi].
    Uniform { lo: u64, hi: u64 },
    /// i.i.d. integers from p(x) ∝ x^(-alpha) on [lo, hi].
    PowerLaw { lo: u64, hi: u64, alpha: f64 },
    /// A fixed vector, assigned to the target nodes in order.
    Explicit { values: Vec<u64> },
}

impl LoadSpec {
    pub fn uniform_default() -> Self {
        LoadSpec::Uniform { lo: 1, hi: 9 }
    }

    pub fn powerlaw_default() -> Self {
        LoadSpec::PowerLaw {
            lo: POWERLAW_RANGE.0,
            hi: POWERLAW_RANGE.1,
            alpha: POWERLAW_ALPHA,
        }
    }
}

/// Draws one load per target node. Same (spec, seed) always yields the same
/// vector.
pub fn generate_loads(
    spec: &LoadSpec,
    targets: usize,
    seed: u64,
) -> Result<Vec<u64>, TopologyError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    generate_loads_with(spec, targets, &mut rng)
}

/// As `generate_loads`, but drawing from a caller-owned stream. Used when a
/// sequence of workloads must come from a single seeded stream.
pub fn generate_loads_with(
    spec: &LoadSpec,
    targets: usize,
    rng: &mut impl Rng,
) -> Result<Vec<u64>, TopologyError> {
    match spec {
        LoadSpec::Uniform { lo, hi } => {
            if lo > hi {
                return Err(TopologyError::EmptyRange { lo: *lo, hi: *hi });
            }
            Ok((0..targets).map(|_| rng.random_range(*lo..=*hi)).collect())
        }
        LoadSpec::PowerLaw { lo, hi, alpha } => {
            if lo > hi {
                return Err(TopologyError::EmptyRange { lo: *lo, hi: *hi });
            }
            // Cumulative weights over the (small) support; inverse-CDF draw.
            let weights: Vec<f64> = (*lo..=*hi).map(|x| (x as f64).powf(-alpha)).collect();
            let total: f64 = weights.iter().sum();
            let mut cdf = Vec::with_capacity(weights.len());
            let mut acc = 0.0;
            for w in &weights {
                acc += w;
                cdf.push(acc / total);
            }
            Ok((0..targets)
                .map(|_| {
                    let u: f64 = rng.random();
                    let idx = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
                    lo + idx as u64
                })
                .collect())
        }
        LoadSpec::Explicit { values } => {
            if values.len() != targets {
                return Err(TopologyError::Malformed(format!(
                    "explicit load vector has {} entries, expected {}",
                    values.len(),
                    targets
                )));
            }
            Ok(values.clone())
        }
    }
}

/// A rooted tree of switches plus the implicit destination behind the root.
///
/// Immutable after construction; children are ordered by ascending id so
/// that dynamic programs over child prefixes are reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNetwork {
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    root: NodeId,
    rate: Vec<f64>,
    load: Vec<u64>,
    available: Vec<bool>,
    depth: Vec<usize>,
    post_order: Vec<NodeId>,
}

impl TreeNetwork {
    /// Validates and builds a network. `parents[v]` is `None` exactly for
    /// the root (whose parent is the destination). `rates[v]` is the rate of
    /// the edge out of `v`, including the root-to-destination edge.
    pub fn build(
        parents: &[Option<NodeId>],
        rates: &[f64],
        loads: &[u64],
        available: &BTreeSet<NodeId>,
    ) -> Result<Self, TopologyError> {
        let n = parents.len();
        if n == 0 {
            return Err(TopologyError::NoRoot);
        }
        if rates.len() != n {
            return Err(TopologyError::MissingRate(rates.len().min(n)));
        }
        if loads.len() != n {
            return Err(TopologyError::Malformed(format!(
                "expected {} loads, got {}",
                n,
                loads.len()
            )));
        }
        let mut root = None;
        for (v, p) in parents.iter().enumerate() {
            match p {
                None => {
                    if root.replace(v).is_some() {
                        return Err(TopologyError::MultipleRoots);
                    }
                }
                Some(p) if *p >= n => return Err(TopologyError::UnknownNode(*p)),
                Some(_) => {}
            }
        }
        let root = root.ok_or(TopologyError::NoRoot)?;
        for (v, &r) in rates.iter().enumerate() {
            if !(r > 0.0) || !r.is_finite() {
                return Err(TopologyError::NonPositiveRate { node: v, rate: r });
            }
        }
        if let Some(&bad) = available.iter().find(|&&v| v >= n) {
            return Err(TopologyError::UnknownNode(bad));
        }

        // Walk each node towards the root; a node revisited within one walk
        // is on a cycle (and can never reach the root).
        let mut depth = vec![usize::MAX; n];
        depth[root] = 0;
        for start in 0..n {
            let mut path = Vec::new();
            let mut v = start;
            while depth[v] == usize::MAX {
                path.push(v);
                v = parents[v].expect("only the root has no parent");
                if path.contains(&v) {
                    return Err(TopologyError::CycleDetected(v));
                }
            }
            let mut d = depth[v];
            for &u in path.iter().rev() {
                d += 1;
                depth[u] = d;
            }
        }

        let mut children = vec![Vec::new(); n];
        for (v, p) in parents.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(v);
            }
        }
        for c in &mut children {
            c.sort_unstable();
        }

        let mut net = TreeNetwork {
            parent: parents.to_vec(),
            children,
            root,
            rate: rates.to_vec(),
            load: loads.to_vec(),
            available: {
                let mut a = vec![false; n];
                for &v in available {
                    a[v] = true;
                }
                a
            },
            depth,
            post_order: Vec::new(),
        };
        net.post_order = net.compute_post_order();
        Ok(net)
    }

    fn compute_post_order(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.len());
        let mut stack = vec![(self.root, 0usize)];
        while let Some((v, next)) = stack.pop() {
            if next < self.children[v].len() {
                stack.push((v, next + 1));
                stack.push((self.children[v][next], 0));
            } else {
                order.push(v);
            }
        }
        order
    }

    /// Complete binary tree with `leaf_count` leaves (a power of two), rates
    /// from `scheme`, and loads from `loads` on the leaves only. Nodes are
    /// numbered heap-style: root 0, children of v at 2v+1 and 2v+2.
    pub fn complete_binary(
        leaf_count: usize,
        scheme: RateScheme,
        loads: &LoadSpec,
        seed: u64,
    ) -> Result<Self, TopologyError> {
        if leaf_count == 0 || !leaf_count.is_power_of_two() {
            return Err(TopologyError::InvalidLeafCount(leaf_count));
        }
        let n = 2 * leaf_count - 1;
        let levels = leaf_count.trailing_zeros() as usize; // tree depth
        let mut parents = vec![None; n];
        let mut rates = vec![0.0; n];
        let mut depth = vec![0usize; n];
        for v in 1..n {
            parents[v] = Some((v - 1) / 2);
            depth[v] = depth[(v - 1) / 2] + 1;
        }
        for v in 0..n {
            // distance of edge (v, p(v)) from the leaf level, 1-based; the
            // root edge (r, d) is one step past the deepest in-tree edge.
            rates[v] = scheme.edge_rate(levels - depth[v] + 1);
        }
        let leaf_ids: Vec<NodeId> = (leaf_count - 1..n).collect();
        let leaf_loads = generate_loads(loads, leaf_ids.len(), seed)?;
        let mut all_loads = vec![0u64; n];
        for (i, &v) in leaf_ids.iter().enumerate() {
            all_loads[v] = leaf_loads[i];
        }
        let available: BTreeSet<NodeId> = (0..n).collect();
        Self::build(&parents, &rates, &all_loads, &available)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v]
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.children[v].is_empty()
    }

    /// Rate of the edge out of `v` (towards its parent, or the destination
    /// for the root).
    pub fn rate(&self, v: NodeId) -> f64 {
        self.rate[v]
    }

    /// Per-message transmission time of the edge out of `v`.
    pub fn tau(&self, v: NodeId) -> f64 {
        1.0 / self.rate[v]
    }

    pub fn load(&self, v: NodeId) -> u64 {
        self.load[v]
    }

    pub fn total_load(&self) -> u64 {
        self.load.iter().sum()
    }

    pub fn is_available(&self, v: NodeId) -> bool {
        self.available[v]
    }

    pub fn available_nodes(&self) -> BTreeSet<NodeId> {
        (0..self.len()).filter(|&v| self.available[v]).collect()
    }

    pub fn depth(&self, v: NodeId) -> usize {
        self.depth[v]
    }

    /// Children-before-parent traversal order.
    pub fn post_order(&self) -> &[NodeId] {
        &self.post_order
    }

    pub fn min_rate(&self) -> f64 {
        self.rate.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_rate(&self) -> f64 {
        self.rate.iter().copied().fold(0.0, f64::max)
    }

    /// Total load in the subtree rooted at `v`.
    pub fn subtree_load(&self, v: NodeId) -> Result<u64, TopologyError> {
        if v >= self.len() {
            return Err(TopologyError::UnknownNode(v));
        }
        let mut sum = 0;
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            sum += self.load[u];
            stack.extend_from_slice(&self.children[u]);
        }
        Ok(sum)
    }

    /// True when every internal node has exactly two children and all
    /// leaves share one depth.
    pub fn is_complete_binary(&self) -> bool {
        let leaf_depth: BTreeSet<usize> = (0..self.len())
            .filter(|&v| self.is_leaf(v))
            .map(|v| self.depth[v])
            .collect();
        leaf_depth.len() == 1
            && (0..self.len()).all(|v| self.is_leaf(v) || self.children[v].len() == 2)
    }

    /// Same topology with a different load vector.
    pub fn with_loads(&self, loads: Vec<u64>) -> Result<Self, TopologyError> {
        if loads.len() != self.len() {
            return Err(TopologyError::Malformed(format!(
                "expected {} loads, got {}",
                self.len(),
                loads.len()
            )));
        }
        let mut net = self.clone();
        net.load = loads;
        Ok(net)
    }

    /// Same topology with a different availability set.
    pub fn with_available(&self, available: &BTreeSet<NodeId>) -> Result<Self, TopologyError> {
        if let Some(&bad) = available.iter().find(|&&v| v >= self.len()) {
            return Err(TopologyError::UnknownNode(bad));
        }
        let mut net = self.clone();
        net.available = vec![false; self.len()];
        for &v in available {
            net.available[v] = true;
        }
        Ok(net)
    }

    /// Serializes to the interchange format. Rates are written with enough
    /// digits to round-trip bit-exactly.
    pub fn to_interchange(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[meta]");
        let _ = writeln!(out, "root = {}", self.root);
        let _ = writeln!(out, "[nodes]");
        let _ = writeln!(out, "# id parent rate load available");
        for v in 0..self.len() {
            let parent = match self.parent[v] {
                Some(p) => p.to_string(),
                None => "d".to_string(),
            };
            let _ = writeln!(
                out,
                "{} {} {:?} {} {}",
                v,
                parent,
                self.rate[v],
                self.load[v],
                u8::from(self.available[v])
            );
        }
        out
    }

    pub fn from_interchange(text: &str) -> Result<Self, TopologyError> {
        let mut section = "";
        let mut root: Option<NodeId> = None;
        let mut rows: Vec<(NodeId, Option<NodeId>, f64, u64, bool)> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') {
                section = match line {
                    "[meta]" => "meta",
                    "[nodes]" => "nodes",
                    other => {
                        return Err(TopologyError::Malformed(format!("unknown section {other}")))
                    }
                };
                continue;
            }
            match section {
                "meta" => {
                    let (key, value) = line
                        .split_once('=')
                        .ok_or_else(|| TopologyError::Malformed(format!("bad meta line {line}")))?;
                    if key.trim() == "root" {
                        root = Some(value.trim().parse().map_err(|_| {
                            TopologyError::Malformed(format!("bad root id {value}"))
                        })?);
                    }
                }
                "nodes" => {
                    let fields: Vec<&str> = line.split_whitespace().collect();
                    if fields.len() != 5 {
                        return Err(TopologyError::Malformed(format!("bad node line {line}")));
                    }
                    let id = fields[0]
                        .parse()
                        .map_err(|_| TopologyError::Malformed(format!("bad id {}", fields[0])))?;
                    let parent = if fields[1] == "d" {
                        None
                    } else {
                        Some(fields[1].parse().map_err(|_| {
                            TopologyError::Malformed(format!("bad parent {}", fields[1]))
                        })?)
                    };
                    let rate = fields[2]
                        .parse()
                        .map_err(|_| TopologyError::Malformed(format!("bad rate {}", fields[2])))?;
                    let load = fields[3]
                        .parse()
                        .map_err(|_| TopologyError::Malformed(format!("bad load {}", fields[3])))?;
                    let avail = match fields[4] {
                        "0" => false,
                        "1" => true,
                        other => {
                            return Err(TopologyError::Malformed(format!(
                                "bad availability flag {other}"
                            )))
                        }
                    };
                    rows.push((id, parent, rate, load, avail));
                }
                _ => return Err(TopologyError::Malformed(format!("stray line {line}"))),
            }
        }
        let n = rows.len();
        let mut parents = vec![None; n];
        let mut rates = vec![f64::NAN; n];
        let mut loads = vec![0; n];
        let mut available = BTreeSet::new();
        for (id, parent, rate, load, avail) in rows {
            if id >= n {
                return Err(TopologyError::Malformed(format!(
                    "node ids must be 0..{n}, got {id}"
                )));
            }
            parents[id] = parent;
            rates[id] = rate;
            loads[id] = load;
            if avail {
                available.insert(id);
            }
        }
        if rates.iter().any(|r| r.is_nan()) {
            return Err(TopologyError::Malformed("duplicate or missing node id".into()));
        }
        let net = Self::build(&parents, &rates, &loads, &available)?;
        if let Some(root) = root {
            if root != net.root() {
                return Err(TopologyError::Malformed(format!(
                    "declared root {root} does not match parent structure"
                )));
            }
        }
        Ok(net)
    }
}
