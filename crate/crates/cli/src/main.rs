//! Config-driven experiment runner; see README for the config format.

mod config;
mod error;
mod run;

use clap::{Args, Parser, Subcommand};
use config::{parse_config, ExperimentKind};
use error::{CliError, Result};
use run::{emit_report, load_manifest, run_experiment, RunOptions, OUT_ENV};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "replab", version, about = "Stability and list-replicability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed override for every selected experiment.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $REPLAB_OUT, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Count failure-flagged outputs toward stability/list mass.
    #[arg(long)]
    include_failures: bool,
    /// Also write JSON mirrors of every report.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// VC, Littlestone and threshold dimensions of a class.
    Dims(ExperimentArgs),
    /// Empirical global-stability certification.
    Stability(ExperimentArgs),
    /// Stability-to-list-replicability conversion bench.
    Listrep(ExperimentArgs),
    /// Majority-vote boosting bench.
    Boost(ExperimentArgs),
    /// Class-error-dependent reduction bench.
    Reduction(ExperimentArgs),
    /// Order-statistic jump probe.
    Jumpprobe(ExperimentArgs),
    /// Combine manifests into combined.csv and a pass/fail summary.
    Report {
        /// Manifest files produced by earlier runs.
        manifests: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run_kind(kind: ExperimentKind, args: ExperimentArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let sections = parse_config(&text)?;
    let selected: Vec<_> = sections.iter().filter(|s| s.kind == kind).collect();
    if selected.is_empty() {
        return Err(CliError::ConfigLine {
            line: 0,
            reason: format!("no [{kind} ...] section in {}", args.config.display()),
        });
    }
    let opts = RunOptions {
        out_dir: out_dir(args.out),
        config_dir: args
            .config
            .parent()
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(".")),
        seed_override: args.seed,
        include_failures: args.include_failures,
        json: args.json,
    };
    for cfg in selected {
        let manifest = run_experiment(cfg, &opts)?;
        let failed = manifest.checks.iter().filter(|c| !c.pass).count();
        println!(
            "{}: wrote {} ({} check(s), {} failed)",
            manifest.experiment_id,
            manifest.outputs.join(", "),
            manifest.checks.len(),
            failed
        );
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Dims(a) => run_kind(ExperimentKind::Dims, a),
        Command::Stability(a) => run_kind(ExperimentKind::Stability, a),
        Command::Listrep(a) => run_kind(ExperimentKind::Listrep, a),
        Command::Boost(a) => run_kind(ExperimentKind::Boost, a),
        Command::Reduction(a) => run_kind(ExperimentKind::Reduction, a),
        Command::Jumpprobe(a) => run_kind(ExperimentKind::Jumpprobe, a),
        Command::Report { manifests, out } => {
            let dir = out_dir(out);
            let loaded = manifests
                .iter()
                .map(|p| load_manifest(p))
                .collect::<Result<Vec<_>>>()?;
            let summary = emit_report(&loaded, &dir)?;
            print!("{summary}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
