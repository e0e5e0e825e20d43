//! Command-line front end: `run`, `list-presets` and `validate`.

pub mod config;
pub mod presets;
pub mod runner;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;

pub use config::{ResolvedScenario, RunConfig, ScenarioConfig, Suite};
pub use presets::{find_preset, Preset, PRESETS};
pub use runner::{run, run_scenario, RunOptions, RunOutcome};

/// Every verdict passed.
pub const EXIT_PASS: i32 = 0;
/// At least one residual exceeded its tolerance.
pub const EXIT_FAIL: i32 = 1;
/// The configuration could not be read or did not validate.
pub const EXIT_CONFIG: i32 = 2;
/// A size cap (dense oracle or refinement study) was exceeded.
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "weyl-lab", version, about = "Numerical checks of time-operator identities on a periodic grid")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every scenario of a configuration file and write reports.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (overrides `jobs`).
        #[arg(long)]
        jobs: Option<usize>,
        /// Seed for randomized checks (overrides `seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the built-in symbols with g, g', Z and the displayed operator.
    ListPresets,
    /// Check a configuration file without running it.
    Validate { config: PathBuf },
}

/// Exit status for an error raised before or during a run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ResourceCap(_) => EXIT_RESOURCE,
        _ => EXIT_CONFIG,
    }
}

/// Executes a parsed command line and returns the process exit status.
pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::ListPresets => match presets::preset_table() {
            Ok(table) => {
                print!("{table}");
                EXIT_PASS
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
        Command::Validate { config } => match RunConfig::load(&config).and_then(|c| c.resolve()) {
            Ok(resolved) => {
                println!("{}: {} scenario(s) valid", config.display(), resolved.len());
                for r in &resolved {
                    let z = r.setup.op.singular_set();
                    println!(
                        "  {}: g = {}, N = {}, L = {}, Z = {:?}, margin = {}",
                        r.scenario.id,
                        r.setup.op.symbol().g(),
                        r.scenario.n,
                        r.scenario.length,
                        z.points(),
                        z.margin()
                    );
                }
                EXIT_PASS
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
        Command::Run { config, out, jobs, seed } => {
            let opts = RunOptions { out, jobs, seed };
            match RunConfig::load(&config).and_then(|c| run(&c, &opts)) {
                Ok(outcome) => {
                    for r in &outcome.reports {
                        let failed: Vec<&str> = r.entries.iter().filter(|e| !e.pass).map(|e| e.name.as_str()).collect();
                        if failed.is_empty() {
                            println!("PASS {} ({} residuals)", r.scenario_id, r.entries.len());
                        } else {
                            println!("FAIL {}: {}", r.scenario_id, failed.join(", "));
                        }
                        for w in &r.warnings {
                            println!("  warning: {w}");
                        }
                    }
                    println!("reports written to {}", outcome.output_dir.display());
                    if outcome.passed {
                        EXIT_PASS
                    } else {
                        EXIT_FAIL
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
    }
}
