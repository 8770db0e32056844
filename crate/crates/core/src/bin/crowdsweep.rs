use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crowdsweep::cli::{self, RunFlags};
use crowdsweep::sweeper::diagnostics::Check;
use crowdsweep::sweeper::Integrator;

#[derive(Parser)]
#[command(version, about = "Crowd sweeping processes with moving obstacles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trajectory, diagnostics and manifest.
    Run {
        #[command(flatten)]
        flags: Flags,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Validate a scenario's declared constants without running it.
    Check {
        #[command(flatten)]
        flags: Flags,
    },
    /// Final mass in the dangerous region for the three exit experiments.
    Braess {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of consecutive seeds.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Results CSV (standard output if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search a grid of rotating elliptic obstacles.
    Optimize {
        #[command(flatten)]
        flags: Flags,
        /// Lines of `c1 c2 a1 a2 omega`.
        #[arg(long)]
        grid: PathBuf,
        /// Results CSV (standard output if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// W2 distance between two cloud CSV files.
    W2 { first: PathBuf, second: PathBuf },
}

#[derive(Args)]
struct Flags {
    /// Scenario file or bundled preset name.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    substeps: Option<usize>,
    #[arg(long)]
    integrator: Option<Integrator>,
    #[arg(long, default_value_t = 0)]
    frames_every: usize,
    /// Comma-separated: support, speed, cone, noflux, stability or all.
    #[arg(long, value_parser = parse_checks, default_value = "support,speed")]
    check: Checks,
}

#[derive(Clone)]
struct Checks(Vec<Check>);

fn parse_checks(s: &str) -> Result<Checks, String> {
    Check::parse_list(s).map(Checks)
}

impl Flags {
    fn run_flags(&self) -> RunFlags {
        RunFlags {
            tau: self.tau,
            particles: self.particles,
            seed: self.seed,
            substeps: self.substeps,
            integrator: self.integrator,
            frames_every: self.frames_every,
            checks: self.check.0.clone(),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { flags, out } => {
            let outcome = cli::run_command(&flags.scenario, &out, &flags.run_flags())?;
            if let Some(row) = outcome.first_failure() {
                eprintln!(
                    "invariant {} failed at t = {}: {} > {}",
                    row.name, row.t, row.value, row.bound
                );
                return Ok(ExitCode::FAILURE);
            }
            println!("wrote {}", out.display());
        }
        Command::Check { flags } => {
            println!("{}", cli::check_command(&flags.scenario, &flags.run_flags())?);
        }
        Command::Braess { seed, seeds, out } => {
            let rows = cli::braess_command(seed..seed + seeds)?;
            cli::emit(out.as_deref(), |w| cli::write_braess_csv(&rows, w))?;
        }
        Command::Optimize { flags, grid, out } => {
            let report = cli::optimize_command(&flags.scenario, &grid, &flags.run_flags())?;
            cli::emit(out.as_deref(), |w| cli::write_optimize_csv(&report, w))?;
        }
        Command::W2 { first, second } => {
            let d = cli::w2_command(&first, &second)
                .with_context(|| format!("comparing {} and {}", first.display(), second.display()))?;
            println!("{d:.16e}");
        }
    }
    Ok(ExitCode::SUCCESS)
}
