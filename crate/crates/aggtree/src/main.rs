use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use aggtree::harness::{run_experiment, ExperimentConfig};
use aggtree::multiworkload::{run_sequence, workload_sequence, CapacityState};
use aggtree::reduce::{congestion_report, Placement};
use aggtree::strategies::{self, StrategyKind};
use aggtree::topology::{LoadSpec, NodeId, TreeNetwork};
use aggtree::solve;

#[derive(Parser)]
#[command(name = "aggtree", about = "Aggregation switch placement on tree networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Top,
    Max,
    Level,
    Smc,
    Allred,
    Allblue,
    Oracle,
}

impl From<StrategyArg> for StrategyKind {
    fn from(value: StrategyArg) -> Self {
        match value {
            StrategyArg::Top => StrategyKind::Top,
            StrategyArg::Max => StrategyKind::Max,
            StrategyArg::Level => StrategyKind::Level,
            StrategyArg::Smc => StrategyKind::Smc,
            StrategyArg::Allred => StrategyKind::AllRed,
            StrategyArg::Allblue => StrategyKind::AllBlue,
            StrategyArg::Oracle => StrategyKind::BruteForce,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimally place at most k aggregation switches.
    Solve {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        emit_placement: Option<PathBuf>,
        #[arg(long)]
        emit_report: Option<PathBuf>,
    },
    /// Place switches with a named strategy.
    Place {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        #[arg(long)]
        emit_placement: Option<PathBuf>,
        #[arg(long)]
        emit_report: Option<PathBuf>,
    },
    /// Run a strategy over an online workload sequence with per-switch
    /// aggregation capacities.
    Multirun {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        workloads: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        capacity: u64,
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Run a configured experiment sweep and write CSV results.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_network(path: &PathBuf) -> Result<TreeNetwork, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    TreeNetwork::from_interchange(&text).map_err(|e| e.to_string())
}

fn write_placement(path: &PathBuf, placement: &Placement) -> Result<(), String> {
    let mut text = String::from("# blue node ids, one per line\n");
    for v in placement.iter() {
        text.push_str(&format!("{v}\n"));
    }
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn emit_outputs(
    net: &TreeNetwork,
    placement: &Placement,
    emit_placement: Option<PathBuf>,
    emit_report: Option<PathBuf>,
) -> Result<(), String> {
    let report = congestion_report(net, placement).map_err(|e| e.to_string())?;
    println!("blue nodes: {:?}", placement.iter().collect::<Vec<_>>());
    println!("network congestion: {:?}", report.network_congestion);
    if let Some(path) = emit_placement {
        write_placement(&path, placement)?;
    }
    if let Some(path) = emit_report {
        let file = fs::File::create(&path)
            .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
        report.write_csv(net, file).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Solve { network, k, emit_placement, emit_report } => {
            let net = load_network(&network)?;
            let (placement, _) = solve(&net, k);
            emit_outputs(&net, &placement, emit_placement, emit_report)
        }
        Command::Place { network, k, strategy, emit_placement, emit_report } => {
            let net = load_network(&network)?;
            let lambda: BTreeSet<NodeId> = net.available_nodes();
            let placement = strategies::place(&net, k, &lambda, strategy.into())
                .map_err(|e| e.to_string())?;
            emit_outputs(&net, &placement, emit_placement, emit_report)
        }
        Command::Multirun { network, workloads, k, capacity, strategy, seed, emit } => {
            let net = load_network(&network)?;
            let sequence = workload_sequence(
                &net,
                &LoadSpec::uniform_default(),
                &LoadSpec::powerlaw_default(),
                workloads,
                seed,
            )
            .map_err(|e| e.to_string())?;
            let state = CapacityState::uniform(net.len(), capacity);
            let run = run_sequence(&net, &sequence, k, state, strategy.into())
                .map_err(|e| e.to_string())?;
            println!(
                "cumulative congestion: {:?} (normalized to all-red: {:?})",
                run.cumulative_congestion(),
                run.normalized_cumulative()
            );
            if let Some(path) = emit {
                let file = fs::File::create(&path)
                    .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
                run.write_csv(file).map_err(|e| e.to_string())?;
            }
            Ok(())
        }
        Command::Experiment { config, seed, out } => {
            let mut config = ExperimentConfig::from_path(&config).map_err(|e| e.to_string())?;
            if let Some(seed) = seed {
                config.solver.seed = seed;
            }
            let result = run_experiment(&config).map_err(|e| e.to_string())?;
            let out_dir = out.unwrap_or_else(|| {
                config.output.path.parent().map(PathBuf::from).unwrap_or_default()
            });
            let rows_path = if out_dir.as_os_str().is_empty() {
                config.output.path.clone()
            } else {
                fs::create_dir_all(&out_dir)
                    .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
                out_dir.join(
                    config.output.path.file_name().unwrap_or_else(|| "results.csv".as_ref()),
                )
            };
            let summary_path = rows_path.with_extension("summary.csv");
            let file = fs::File::create(&rows_path)
                .map_err(|e| format!("cannot create {}: {e}", rows_path.display()))?;
            result.write_csv(file).map_err(|e| e.to_string())?;
            let file = fs::File::create(&summary_path)
                .map_err(|e| format!("cannot create {}: {e}", summary_path.display()))?;
            result.write_summary_csv(file).map_err(|e| e.to_string())?;
            println!(
                "wrote {} rows to {} (summary: {})",
                result.rows.len(),
                rows_path.display(),
                summary_path.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
