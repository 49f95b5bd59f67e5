use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nvm_lstm_cli::{run, Command};

/// Crossbar LSTM experiments: training, bit-width and noise sweeps, cost model.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Train and evaluate one configuration.
    Train(Common),
    /// Train every (weight bits, ADC/DAC bits) cell of a grid.
    Sweep(Common),
    /// Throughput, power and area estimate.
    Cost(CostArgs),
    /// Weight-noise and ADC-noise sweeps.
    NoiseSweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML or JSON config, or a manifest.json from an earlier run.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct CostArgs {
    /// Hardware config; defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct Shared {
    /// Output directory (overrides `out` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root seed (overrides `experiment.train.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, config, shared) = match cli.command {
        Sub::Train(c) => (Command::Train, Some(c.config), c.shared),
        Sub::Sweep(c) => (Command::Sweep, Some(c.config), c.shared),
        Sub::NoiseSweep(c) => (Command::NoiseSweep, Some(c.config), c.shared),
        Sub::Cost(c) => (Command::Cost, c.config, c.shared),
    };
    if let Some(n) = shared.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match config {
        Some(path) => run(&path, Some(command), shared.seed, shared.out),
        None => nvm_lstm_cli::run_default_cost(shared.out),
    };
    match result {
        Ok(a) => {
            println!("{}: {}", command.name(), a.summary);
            println!("wrote {}", a.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
