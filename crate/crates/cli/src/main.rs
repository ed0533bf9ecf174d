use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use seiv_cli::{bounds, control, simulate, verify, CliResult, ScenarioConfig};

#[derive(Parser)]
#[command(name = "seiv", version, about = "Simulate, bound and control SEIV epidemics on directed graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (.toml or .json); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Root seed, overriding `controller.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Uncontrolled sample paths.
    Simulate(Common),
    /// Crude and refined bound traces from the initial state.
    Bounds(Common),
    /// Closed-loop replications with ensemble statistics.
    Control(Common),
    /// Oracle verification suites on small random instances.
    Verify(Common),
}

fn load(c: &Common) -> CliResult<ScenarioConfig> {
    let mut cfg = match &c.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.controller.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Simulate(c) => {
            let s = simulate::cmd_simulate(&load(&c)?, &c.out)?;
            Ok(format!("{} runs, {} eliminated within {}", s.trials, s.eliminated, s.horizon))
        }
        Command::Bounds(c) => {
            let s = bounds::cmd_bounds(&load(&c)?, &c.out)?;
            Ok(format!(
                "{} grid points, nested everywhere: {}, max upper crude {:.6} refined {:.6}",
                s.grid_points, s.nested_everywhere, s.crude_max_upper, s.refined_max_upper
            ))
        }
        Command::Control(c) => {
            let r = control::cmd_control(&load(&c)?, &c.out)?;
            Ok(format!(
                "{} runs, mean elimination time {:.4} (bound {:.4}), {} of {} decisions at or below total-quarantine cost",
                r.completed_trials, r.elimination.empirical_mean, r.elimination.elim_bound, r.dominated_decisions, r.decisions
            ))
        }
        Command::Verify(c) => {
            let r = verify::cmd_verify(&load(&c)?, &c.out)?;
            Ok(r.suites.iter().map(|s| format!("PASS {} ({} checks)", s.name, s.checks)).collect::<Vec<_>>().join("\n"))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
