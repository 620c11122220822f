//! `hetcache`: runs analyze/simulate/optimize/sweep experiments from a TOML
//! config and writes CSV tables plus a JSON sidecar.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 config error, 3 numerical failure.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, Mode, Overrides};

#[derive(Parser)]
#[command(name = "hetcache", version, about = "Cache placement and interference nulling experiments for two-tier HetNets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form success probabilities and ASE for a given policy.
    Analyze(Common),
    /// Monte Carlo estimates and Θ histogram for a given policy.
    Simulate(Common),
    /// Proposed, MPC, UDC and upper-bound solutions at one point.
    Optimize(Common),
    /// Optimizer comparison along one parameter axis.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides both the simulation and the optimizer seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output_path` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.chain().any(|c| c.is::<ConfigError>()) {
        2
    } else if e.chain().any(|c| c.is::<hetcache_core::Error>()) {
        3
    } else {
        1
    }
}

fn execute(mode: Mode, args: Common) -> anyhow::Result<()> {
    if let Some(n) = args.jobs {
        if n == 0 {
            return Err(ConfigError("--jobs must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let exp = config::load(&args.config, mode, &Overrides { seed: args.seed, out: args.out })?;
    let tables = run::run(&exp)?;
    for path in output::write_all(&exp, &tables)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Analyze(a) => (Mode::Analyze, a),
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Optimize(a) => (Mode::Optimize, a),
        Command::Sweep(a) => (Mode::Sweep, a),
    };
    match execute(mode, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
