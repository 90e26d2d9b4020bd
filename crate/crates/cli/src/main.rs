use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use esd_core::recompile::{table1, GateSet, RecompileOptions};
use esd_core::{recompile, EquivalenceType, GateSetName};
use esd_lab::{run_experiment, write_outputs, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "esd-lab", version, about = "Derangement error-suppression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Method A/B errors against their bounds for n = 1..n_max copies.
    SuppressionSweep(RunArgs),
    /// Extrapolation of derangement-circuit noise.
    DerangementZne(RunArgs),
    /// Spin-ring VQE energy with and without mitigation.
    GroundState(RunArgs),
    /// Dominant-eigenvector mismatch against ε and gate count.
    CoherentMismatch(RunArgs),
    /// Noisy derangement with and without Pauli twirling.
    TwirlCompare(RunArgs),
    /// Copy numbers and shot budgets.
    ResourcePlan(RunArgs),
    /// Searches a native-gate circuit equivalent to CSWAP.
    Recompile(RecompileArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config (default: current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct RecompileArgs {
    /// Gate set label or unique prefix, e.g. "XX", "CRx", "pSWAP".
    #[arg(long)]
    gateset: String,
    /// Equivalence type: A, B or C.
    #[arg(long = "type")]
    ty: String,
    /// Total entangling gates (default: the published count).
    #[arg(long)]
    entangling: Option<usize>,
    /// Three-qubit gates among them (default: the published count).
    #[arg(long)]
    three: Option<usize>,
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    cfg.expect_kind(kind)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.workers == Some(0) {
        bail!("--workers must be positive");
    }
    let dir = args.out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    let start = Instant::now();
    let out = run_experiment(&cfg, args.workers)?;
    let paths = write_outputs(&cfg, &out, &dir, start.elapsed())?;
    eprintln!("{} rows -> {} ({:.1} s)", out.table.rows.len(), paths.csv.display(), start.elapsed().as_secs_f64());
    Ok(())
}

fn run_recompile(args: RecompileArgs) -> Result<()> {
    let gs = GateSetName::parse(&args.gateset)?;
    let ty = EquivalenceType::parse(&args.ty)?;
    let published = table1(gs, ty);
    let set = GateSet::new(gs);
    let three = args.three.unwrap_or(if set.three_qubit.is_some() { published.three_qubit } else { 0 });
    let total = args.entangling.unwrap_or(published.three_qubit + published.two_qubit);
    if three > total {
        bail!("{three} three-qubit gates exceed {total} entangling gates");
    }
    let opts = RecompileOptions { restarts: args.restarts, seed: args.seed, ..Default::default() };
    let report = recompile(gs, ty, three, total - three, &opts)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match args.out {
        Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SuppressionSweep(a) => run(ExperimentKind::SuppressionSweep, a),
        Command::DerangementZne(a) => run(ExperimentKind::DerangementZne, a),
        Command::GroundState(a) => run(ExperimentKind::GroundState, a),
        Command::CoherentMismatch(a) => run(ExperimentKind::CoherentMismatch, a),
        Command::TwirlCompare(a) => run(ExperimentKind::TwirlCompare, a),
        Command::ResourcePlan(a) => run(ExperimentKind::ResourcePlan, a),
        Command::Recompile(a) => run_recompile(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
