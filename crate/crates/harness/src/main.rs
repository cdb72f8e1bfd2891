use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rsbeam_harness::config::{parse_config, ExperimentConfig, ExperimentKind};
use rsbeam_harness::output::{emit_csv, emit_summary, summarize, Summary};
use rsbeam_harness::{run_experiment, HarnessError};

#[derive(Parser)]
#[command(name = "rsbeam", version, about = "Robust RS / NoRS precoder experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Max-min rate sweep over SNR points.
    Maxmin(RunArgs),
    /// Power minimization under a rate target over a radius grid.
    Minpower(RunArgs),
    /// DoF sweep of the constructive scheme.
    Dof(RunArgs),
    /// Parse and check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Overrides the seed of the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn run(args: &RunArgs, kind: ExperimentKind) -> Result<(), HarnessError> {
    let start = Instant::now();
    let mut config: ExperimentConfig = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if config.kind != kind {
        return Err(HarnessError::Config {
            line: None,
            message: format!("config kind {:?} does not match the subcommand", config.kind),
        });
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = args.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build().map_err(|e| HarnessError::Io(e.to_string()))?;
    let out = pool.install(|| run_experiment(&config))?;

    std::fs::create_dir_all(&args.out_dir)?;
    let id = config.experiment_id();
    let csv_path = args.out_dir.join(format!("{id}.csv"));
    emit_csv(&out.rows, &csv_path)?;
    let summary = Summary {
        experiment: id.clone(),
        points: summarize(&out.rows),
        dof: out.dof.clone(),
        failed_solves: out.failed_solves,
        total_solves: out.total_solves,
        wall_time_ms: start.elapsed().as_millis() as u64,
    };
    emit_summary(&summary, &args.out_dir.join(format!("{id}_summary.json")))?;
    for d in &out.dof {
        println!("{}: slope {:.4} (predicted {:.4}), r2 {:.4}", d.scheme, d.slope, d.predicted, d.r2);
    }
    println!("wrote {} rows to {}", out.rows.len(), csv_path.display());
    if out.too_many_failures() {
        return Err(HarnessError::TooManyFailures {
            failed: out.failed_solves,
            total: out.total_solves,
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Maxmin(a) => run(a, ExperimentKind::MaxMinSweep),
        Command::Minpower(a) => run(a, ExperimentKind::PowerFeasibility),
        Command::Dof(a) => run(a, ExperimentKind::DofSweep),
        Command::Validate { config } => parse_config(config).map(|c| {
            println!("{}: {:?}, K={}, Nt={}, {} channels, seed {}", c.experiment_id(), c.kind, c.k, c.nt, c.channels, c.seed)
        }),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
