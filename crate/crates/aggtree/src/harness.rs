//! Configuration-driven experiment runner: sweeps strategies, budgets,
//! rate schemes, and load distributions, emitting versioned CSV artifacts.

use std::collections::BTreeSet;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reduce::congestion_report;
use crate::strategies::{self, StrategyKind};
use crate::topology::{
    generate_loads, LoadSpec, NodeId, RateScheme, TopologyError, TreeNetwork,
};

/// Bumped whenever a CSV column changes meaning; emitted in every row.
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config field `{field}`: {message}")]
    Validation { field: &'static str, message: String },
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Strategy(#[from] strategies::StrategyError),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid application profile parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum NetworkSpec {
    CompleteBinary { leaves: usize },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadKind {
    Uniform,
    Powerlaw,
}

impl LoadKind {
    pub fn name(self) -> &'static str {
        match self {
            LoadKind::Uniform => "uniform",
            LoadKind::Powerlaw => "powerlaw",
        }
    }

    pub fn spec(self) -> LoadSpec {
        match self {
            LoadKind::Uniform => LoadSpec::uniform_default(),
            LoadKind::Powerlaw => LoadSpec::powerlaw_default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct LoadsSection {
    pub kinds: Vec<LoadKind>,
}

fn default_repetitions() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize)]
pub struct SolverSection {
    pub k: Vec<usize>,
    pub strategies: Vec<StrategyKind>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct OutputSection {
    pub path: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentConfig {
    pub network: NetworkSpec,
    pub rates: RateScheme,
    pub loads: LoadsSection,
    pub solver: SolverSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.solver.strategies.is_empty() {
            return Err(HarnessError::Validation {
                field: "solver.strategies",
                message: "at least one strategy is required".into(),
            });
        }
        if self.solver.k.is_empty() {
            return Err(HarnessError::Validation {
                field: "solver.k",
                message: "at least one budget is required".into(),
            });
        }
        if self.solver.repetitions == 0 {
            return Err(HarnessError::Validation {
                field: "solver.repetitions",
                message: "repetitions must be at least 1".into(),
            });
        }
        if self.loads.kinds.is_empty() {
            return Err(HarnessError::Validation {
                field: "loads.kinds",
                message: "at least one load kind is required".into(),
            });
        }
        let switches = match &self.network {
            NetworkSpec::CompleteBinary { leaves } => {
                if *leaves == 0 || !leaves.is_power_of_two() {
                    return Err(HarnessError::Validation {
                        field: "network.leaves",
                        message: format!("{leaves} is not a power of two"),
                    });
                }
                2 * leaves - 1
            }
            NetworkSpec::File { path } => {
                if !path.exists() {
                    return Err(HarnessError::Validation {
                        field: "network.path",
                        message: format!("{} does not exist", path.display()),
                    });
                }
                usize::MAX
            }
        };
        if let Some(&bad) = self.solver.k.iter().find(|&&k| k == 0 || k > switches) {
            return Err(HarnessError::Validation {
                field: "solver.k",
                message: format!("budget {bad} must be positive and at most {switches}"),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub repetition: usize,
    pub strategy: StrategyKind,
    pub k: usize,
    pub rate_scheme: String,
    pub load_kind: LoadKind,
    pub psi: f64,
    pub psi_normalized_to_smc: f64,
    pub psi_normalized_to_allred: f64,
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub strategy: StrategyKind,
    pub k: usize,
    pub load_kind: LoadKind,
    pub mean_psi: f64,
    pub stddev_psi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

fn scheme_name(scheme: &RateScheme) -> String {
    match scheme {
        RateScheme::Constant => "constant".into(),
        RateScheme::Linear { .. } => "linear".into(),
        RateScheme::Exponential { .. } => "exponential".into(),
    }
}

/// Splits one base seed into independent per-cell seeds.
fn mix_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.rotate_left(32);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn base_network(config: &ExperimentConfig, seed: u64, kind: LoadKind) -> Result<TreeNetwork, HarnessError> {
    match &config.network {
        NetworkSpec::CompleteBinary { leaves } => Ok(TreeNetwork::complete_binary(
            *leaves,
            config.rates,
            &kind.spec(),
            seed,
        )?),
        NetworkSpec::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
                path: path.clone(),
                source,
            })?;
            let net = TreeNetwork::from_interchange(&text)?;
            // regenerate leaf loads from the configured distribution
            let leaves: Vec<NodeId> = (0..net.len()).filter(|&v| net.is_leaf(v)).collect();
            let leaf_loads = generate_loads(&kind.spec(), leaves.len(), seed)?;
            let mut loads = vec![0u64; net.len()];
            for (i, &v) in leaves.iter().enumerate() {
                loads[v] = leaf_loads[i];
            }
            Ok(net.with_loads(loads)?)
        }
    }
}

/// Runs the configured sweep. Rows come out in deterministic
/// (load kind, repetition, k, strategy) order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    config.validate()?;
    let mut rows = Vec::new();
    let scheme = scheme_name(&config.rates);
    for (kind_idx, &kind) in config.loads.kinds.iter().enumerate() {
        for rep in 0..config.solver.repetitions {
            let seed = mix_seed(config.solver.seed, kind_idx as u64, rep as u64);
            let net = base_network(config, seed, kind)?;
            let lambda: BTreeSet<NodeId> = net.available_nodes();
            let allred_psi = congestion_report(&net, &crate::reduce::Placement::empty())
                .expect("the empty placement is always valid")
                .network_congestion;
            for &k in &config.solver.k {
                let smc_start = Instant::now();
                let (_, smc_psi) = crate::smc::solve(&net, k);
                let smc_runtime = smc_start.elapsed().as_secs_f64();
                for &strategy in &config.solver.strategies {
                    let start = Instant::now();
                    let (psi, runtime) = if strategy == StrategyKind::Smc {
                        (smc_psi, smc_runtime)
                    } else {
                        let placement = strategies::place(&net, k, &lambda, strategy)?;
                        let psi = congestion_report(&net, &placement)
                            .expect("strategies only color available nodes")
                            .network_congestion;
                        (psi, start.elapsed().as_secs_f64())
                    };
                    rows.push(ResultRow {
                        experiment: format!("{scheme}-{}", kind.name()),
                        repetition: rep,
                        strategy,
                        k,
                        rate_scheme: scheme.clone(),
                        load_kind: kind,
                        psi,
                        psi_normalized_to_smc: if smc_psi > 0.0 { psi / smc_psi } else { 1.0 },
                        psi_normalized_to_allred: if allred_psi > 0.0 {
                            psi / allred_psi
                        } else {
                            1.0
                        },
                        runtime_secs: runtime,
                    });
                }
            }
        }
    }
    let summary = summarize(&rows, config);
    Ok(ExperimentResult { rows, summary })
}

fn summarize(rows: &[ResultRow], config: &ExperimentConfig) -> Vec<SummaryRow> {
    let mut summary = Vec::new();
    for &kind in &config.loads.kinds {
        for &k in &config.solver.k {
            for &strategy in &config.solver.strategies {
                let psis: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.load_kind == kind && r.k == k && r.strategy == strategy)
                    .map(|r| r.psi)
                    .collect();
                if psis.is_empty() {
                    continue;
                }
                let mean = psis.iter().sum::<f64>() / psis.len() as f64;
                let var =
                    psis.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / psis.len() as f64;
                summary.push(SummaryRow {
                    strategy,
                    k,
                    load_kind: kind,
                    mean_psi: mean,
                    stddev_psi: var.sqrt(),
                });
            }
        }
    }
    summary
}

impl ExperimentResult {
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "schema_version",
            "experiment",
            "repetition",
            "strategy",
            "k",
            "rate_scheme",
            "load_kind",
            "psi",
            "psi_normalized_to_smc",
            "psi_normalized_to_allred",
            "runtime_secs",
        ])?;
        for r in &self.rows {
            w.write_record([
                CSV_SCHEMA_VERSION.to_string(),
                r.experiment.clone(),
                r.repetition.to_string(),
                r.strategy.name().to_string(),
                r.k.to_string(),
                r.rate_scheme.clone(),
                r.load_kind.name().to_string(),
                format!("{:?}", r.psi),
                format!("{:?}", r.psi_normalized_to_smc),
                format!("{:?}", r.psi_normalized_to_allred),
                format!("{:?}", r.runtime_secs),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "schema_version",
            "strategy",
            "k",
            "load_kind",
            "mean_psi",
            "stddev_psi",
        ])?;
        for s in &self.summary {
            w.write_record([
                CSV_SCHEMA_VERSION.to_string(),
                s.strategy.name().to_string(),
                s.k.to_string(),
                s.load_kind.name().to_string(),
                format!("{:?}", s.mean_psi),
                format!("{:?}", s.stddev_psi),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Application load profiles abstracting the two use cases as worker-count
/// distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AppKind {
    /// Word count: per-leaf message counts shrunk by key overlap across
    /// workers.
    Wc,
    /// Parameter server: every worker emits one dense update per round.
    Ps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppParams {
    /// Fraction of a worker's messages that survive key deduplication.
    /// 1.0 makes WC identical to PS.
    pub duplication: f64,
}

impl Default for AppParams {
    fn default() -> Self {
        AppParams { duplication: 0.25 }
    }
}

/// Distributes `workers` uniformly over `leaves` racks and converts the
/// per-rack counts into a load profile for `kind`.
pub fn app_profile(
    kind: AppKind,
    workers: u64,
    leaves: usize,
    params: AppParams,
    seed: u64,
) -> Result<LoadSpec, HarnessError> {
    if workers == 0 {
        return Err(HarnessError::InvalidParams("workers must be at least 1".into()));
    }
    if leaves == 0 {
        return Err(HarnessError::InvalidParams("leaves must be at least 1".into()));
    }
    if !(params.duplication > 0.0) {
        return Err(HarnessError::InvalidParams(format!(
            "duplication factor must be positive, got {}",
            params.duplication
        )));
    }
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; leaves];
    for _ in 0..workers {
        counts[rng.random_range(0..leaves)] += 1;
    }
    let values = match kind {
        AppKind::Ps => counts,
        AppKind::Wc => counts
            .into_iter()
            .map(|c| {
                if c == 0 {
                    0
                } else {
                    ((c as f64 * params.duplication).round() as u64).max(1)
                }
            })
            .collect(),
    };
    Ok(LoadSpec::Explicit { values })
}
