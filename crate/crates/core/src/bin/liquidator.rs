//! Command-line front end: scenario files in, CSV/JSON reports out.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use liquidator::report::{self, Command as RunCommand, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "liquidator",
    about = "Optimal liquidation strategies: closed-form solvers and Monte Carlo backtests",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (JSON with a `setting` discriminator).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV/JSON reports.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's path count.
    #[arg(long)]
    paths: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic curves and value-function coefficients.
    Solve(CommonArgs),
    /// Monte Carlo ensembles for the configured setting.
    Simulate(CommonArgs),
    /// Efficient-frontier sweep over the risk-aversion grid.
    Frontier(CommonArgs),
    /// Accuracy study of the slow-volatility expansion.
    Residual(CommonArgs),
    /// Order-book experiment: market-only versus market-and-limit.
    Lob(CommonArgs),
}

impl Command {
    fn split(self) -> (RunCommand, CommonArgs) {
        match self {
            Command::Solve(a) => (RunCommand::Solve, a),
            Command::Simulate(a) => (RunCommand::Simulate, a),
            Command::Frontier(a) => (RunCommand::Frontier, a),
            Command::Residual(a) => (RunCommand::Residual, a),
            Command::Lob(a) => (RunCommand::Lob, a),
        }
    }
}

/// Worker cap from `LIQUIDATOR_THREADS` (0 or unset: library default).
fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var("LIQUIDATOR_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = cli.command.split();

    let mut cfg: ScenarioConfig = match report::load_config(&args.config) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("{err}");
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(paths) = args.paths {
        cfg.paths = paths;
    }

    let result = thread_pool().install(|| report::run_scenario(command, &cfg, &args.out_dir));
    match result {
        Ok(bundle) => {
            if !bundle.summary.is_empty() {
                print!("{}", report::render_summary(&bundle.summary));
            }
            if let Some(r) = &bundle.residual {
                println!("expansion residual slope: {:.4}", r.slope);
            }
            if let Some(s) = &bundle.solve {
                println!("h(0) = {:.6}, J(0, Q) = {:.2}", s.h_start, s.value_start);
            }
            println!(
                "wrote {} file(s) to {}",
                bundle.files.len() + 1,
                args.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
