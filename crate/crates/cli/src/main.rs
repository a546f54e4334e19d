use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fleetsim_core::scenario::{self, DemoOptions, ScenarioConfig, TasteMode};
use fleetsim_core::Error;

#[derive(Debug, Parser)]
#[command(name = "fleetsim", version, about = "Agent-based Robo-Taxi fleet sizing simulator")]
struct Cli {
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Taste {
    On,
    Off,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario until convergence and write logs and KPIs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides run.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the scenario for several fleet sizes, with and/or without taste factors.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        fleet_sizes: Vec<u32>,
        #[arg(long, value_enum, default_value = "both")]
        taste: Taste,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Synthesize the population only.
    Synthesize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic grid-town scenario.
    Demo {
        #[arg(long, default_value_t = 12)]
        grid_n: u32,
        #[arg(long)]
        zones_per_side: Option<u32>,
        #[arg(long, default_value_t = 20_000)]
        persons: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        fleet_size: u32,
        #[arg(long, default_value_t = 200)]
        max_iterations: u32,
    },
}

fn load(config: &Path) -> Result<ScenarioConfig, Error> {
    ScenarioConfig::load(config)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let cfg = load(&config)?;
            let dir = scenario::output_dir(&cfg, out.as_deref());
            let outcome = scenario::run_scenario(&cfg, seed.unwrap_or(cfg.run.seed), &dir)?;
            println!(
                "{} iterations, converged: {}, robotaxi share {:.4}, output in {}",
                outcome.iterations,
                outcome.converged,
                outcome.kpis.rt_share(),
                dir.display()
            );
        }
        Command::Sweep {
            config,
            fleet_sizes,
            taste,
            out,
            seed,
        } => {
            scenario::validate_fleet_sizes(&fleet_sizes)?;
            let cfg = load(&config)?;
            let dir = scenario::output_dir(&cfg, out.as_deref());
            let mode = match taste {
                Taste::On => TasteMode::On,
                Taste::Off => TasteMode::Off,
                Taste::Both => TasteMode::Both,
            };
            let sweep = scenario::run_sweep(&cfg, seed.unwrap_or(cfg.run.seed), &fleet_sizes, mode, &dir)?;
            println!("{} cells, output in {}", sweep.cells.len(), dir.display());
        }
        Command::Synthesize { config, out } => {
            let cfg = load(&config)?;
            let dir = scenario::output_dir(&cfg, out.as_deref());
            let pop = scenario::run_synthesis(&cfg, &dir)?;
            println!("{} households, {} persons, output in {}", pop.households.len(), pop.persons.len(), dir.display());
        }
        Command::Demo {
            grid_n,
            zones_per_side,
            persons,
            seed,
            out,
            fleet_size,
            max_iterations,
        } => {
            let mut opts = DemoOptions::new(grid_n, persons, seed);
            if let Some(z) = zones_per_side {
                opts.zones_per_side = z;
            }
            opts.fleet_size = fleet_size;
            opts.max_iterations = max_iterations;
            let path = scenario::generate_demo_scenario(&opts, &out)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
