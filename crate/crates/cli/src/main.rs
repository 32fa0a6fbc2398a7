use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ghznet_cli::{
    run_decision_boundary, run_distance_curves, run_parent_fidelity_sweep, run_parent_rate_sweep,
    run_validation, CliError, Metric, SweepConfig,
};

/// Rate and fidelity calculator for GHZ-state distribution over switched
/// quantum networks, with repeater decision boundaries and a validation
/// report backed by a protocol simulator and an exact density-matrix
/// calculator.
#[derive(Parser)]
#[command(name = "ghznet", version, about)]
struct Cli {
    /// JSON sweep configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config's random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the config's simulation trial count.
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Output file (CSV for sweeps, JSON for validate). Required; nothing
    /// is written implicitly.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; defaults to the number of cores. Outputs are
    /// byte-identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Source-based vs measurement-based parent fidelity plane.
    ParentFidelity,
    /// Parent link-stage rounds against parallel attempts.
    ParentRate,
    /// m=1 vs m=2 winner grid over (noise, distance).
    Boundary {
        #[arg(long, value_enum)]
        metric: Metric,
    },
    /// Metric against distance for m=1 and m=2.
    Curves {
        #[arg(long, value_enum)]
        metric: Metric,
    },
    /// Cross-check report; exits 1 on hard failures.
    Validate,
}

fn load_config(cli: &Cli) -> Result<SweepConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            SweepConfig::from_json(&text)?
        }
        None => SweepConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        if trials == 0 {
            return Err(CliError::Config("trials must be >= 1".into()));
        }
        config.trials = Some(trials);
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let config = load_config(cli)?;
    let out = cli
        .out
        .clone()
        .ok_or_else(|| CliError::Config("--out is required; nothing is written implicitly".into()))?;

    let (payload, hard_failures) = match &cli.command {
        Command::ParentFidelity => (run_parent_fidelity_sweep(&config)?, 0),
        Command::ParentRate => (run_parent_rate_sweep(&config)?, 0),
        Command::Boundary { metric } => (run_decision_boundary(&config, *metric)?.1, 0),
        Command::Curves { metric } => (run_distance_curves(&config, *metric)?, 0),
        Command::Validate => {
            let report = run_validation(&config)?;
            let failures = report.hard_failures.len();
            for failure in &report.hard_failures {
                eprintln!("hard failure: {failure}");
            }
            (report.to_json(), failures)
        }
    };

    fs::write(&out, payload)?;
    eprintln!("wrote {}", out.display());
    Ok(if hard_failures > 0 { 1 } else { 0 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
