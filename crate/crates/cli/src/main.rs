//! `rhjam` command line: simulate one scenario, print its condition report,
//! or run a parameter sweep.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rhjam::config::ScenarioConfig;
use rhjam::dynamics::StateVector;
use rhjam::sweep::{self, SweepSpec};
use rhjam::{analysis, engine};

#[derive(Parser)]
#[command(name = "rhjam", version, about = "Rolling-horizon jamming game on consensus networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write trajectory.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace x0 with a uniform sample on [-1, 1] drawn from this seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// Print the condition report of a scenario as JSON.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Run every grid point of a sweep and write sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the sweep file's seed for x0 sampling.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out, seed, quiet } => simulate(&config, &out, seed, quiet),
        Command::Analyze { config, quiet } => analyze(&config, quiet),
        Command::Sweep { config, out, seed, quiet } => run_sweep(&config, &out, seed, quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

/// Writes every file to a temporary name first and renames them only after
/// all of them were produced, so a failure leaves no partial outputs.
fn write_outputs(out: &Path, files: &[(&str, Vec<u8>)]) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut staged = Vec::new();
    for (name, bytes) in files {
        let tmp = out.join(format!(".{name}.tmp"));
        let mut f = fs::File::create(&tmp).with_context(|| format!("cannot write {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
        staged.push((tmp, out.join(name)));
    }
    for (tmp, dest) in staged {
        fs::rename(&tmp, &dest).with_context(|| format!("cannot write {}", dest.display()))?;
    }
    Ok(())
}

fn simulate(config: &Path, out: &Path, seed: Option<u64>, quiet: bool) -> Result<()> {
    let cfg = ScenarioConfig::load(config)?;
    let mut scenario = cfg.to_scenario()?;
    if let Some(seed) = seed {
        scenario.x0 = StateVector::new(sweep::sample_x0(scenario.graph.n(), seed, 0))?;
    }
    let result = engine::run(&scenario)?;
    let mut csv = Vec::new();
    engine::write_trajectory_csv(&scenario, &result, &mut csv)?;
    let summary = engine::summarize(&scenario, &result);
    let mut json = serde_json::to_vec_pretty(&summary)?;
    json.push(b'\n');
    write_outputs(out, &[("trajectory.csv", csv), ("summary.json", json)])?;
    if !quiet {
        println!(
            "{} steps, consensus {}, {} clusters, attacker utility {}",
            summary.steps, summary.consensus, summary.cluster_count, summary.cumulative_applied_utility_attacker
        );
        let report = engine::audit(&scenario, &result);
        for v in &report.violations {
            eprintln!("audit: {v}");
        }
    }
    Ok(())
}

fn analyze(config: &Path, _quiet: bool) -> Result<()> {
    let scenario = ScenarioConfig::load(config)?.to_scenario()?;
    let report = analysis::build_report(&scenario)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn run_sweep(config: &Path, out: &Path, seed: Option<u64>, quiet: bool) -> Result<()> {
    let mut spec = SweepSpec::load(config)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let rows = sweep::run_sweep(&spec)?;
    let mut csv = Vec::new();
    sweep::write_sweep_csv(&spec, &rows, &mut csv)?;
    write_outputs(out, &[("sweep.csv", csv)])?;
    if !quiet {
        println!("{} rows written to {}", rows.len(), out.join("sweep.csv").display());
    }
    Ok(())
}
