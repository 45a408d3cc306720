use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ramp_core::scenario::{compare, write_outputs, write_plan, Scenario, ScenarioError};

/// Plan and simulate legged locomotion in microgravity.
///
/// Exit status: 0 goal reached, 10 detached and floating, 11 singularity,
/// 12 time out, 13 numerical blow-up; 20 invalid config, 21 planner error,
/// 22 scenarios not comparable, 23 simulator error, 1 I/O error, 2 usage.
#[derive(Debug, Parser)]
#[command(name = "ramp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan and simulate one scenario.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: Overrides,
        /// Write the planned trajectories only, without simulating.
        #[arg(long)]
        emit_plan: bool,
    },
    /// Run several scenarios that differ only in mode and compare them.
    Compare {
        #[arg(required = true, num_args = 1..)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        opts: Overrides,
    },
}

#[derive(Debug, Args)]
struct Overrides {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integration timestep in seconds.
    #[arg(long)]
    timestep: Option<f64>,
    /// Seed of the swing optimizer's random starts.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(path: &Path, opts: &Overrides) -> Result<Scenario, ScenarioError> {
    let mut s = Scenario::load(path)?;
    if let Some(seed) = opts.seed {
        s.set_seed(seed);
    }
    if let Some(dt) = opts.timestep {
        s.set_timestep(dt)?;
    }
    Ok(s)
}

fn run(config: &Path, opts: &Overrides, emit_plan: bool) -> Result<i32, ScenarioError> {
    let scenario = load(config, opts)?;
    let dir = opts.out.clone().unwrap_or_else(|| scenario.out_dir());
    if emit_plan {
        let plan = scenario.plan()?;
        let path = write_plan(&plan, &dir)?;
        println!("plan written to {}", path.display());
        if let Some(f) = &plan.failure {
            println!("plan stops at t = {:.3} s: {}", f.time, f.message);
        }
        return Ok(0);
    }
    let outcome = scenario.run()?;
    write_outputs(&scenario, &outcome, &dir)?;
    let s = &outcome.summary;
    println!(
        "{}: {} after {:.3} s, distance {:.4} m, max force {:.4} N, mean force {:.4} N",
        s.name,
        s.termination.name(),
        s.stats.end_time,
        s.stats.distance,
        s.stats.max_force,
        s.stats.mean_force
    );
    for d in &s.detachments {
        println!("  detachment of limb {} at t = {:.4} s ({:.4} N)", d.limb, d.time, d.tensile_force);
    }
    for e in &s.singularities {
        println!("  singularity at t = {:.4} s: {}", e.time, e.message);
    }
    println!("results in {}", dir.display());
    Ok(s.exit_code)
}

fn compare_all(configs: &[PathBuf], opts: &Overrides) -> Result<i32, ScenarioError> {
    let scenarios = configs.iter().map(|c| load(c, opts)).collect::<Result<Vec<_>, _>>()?;
    let (outcomes, summary) = compare(&scenarios)?;
    let dir = opts.out.clone().unwrap_or_else(|| PathBuf::from("out/comparison"));
    let mut used = std::collections::HashSet::new();
    for (s, o) in scenarios.iter().zip(&outcomes) {
        let mut name = s.config.name.clone();
        let mut k = 1;
        while !used.insert(name.clone()) {
            k += 1;
            name = format!("{}-{k}", s.config.name);
        }
        write_outputs(s, o, &dir.join(name))?;
    }
    let table = summary.render();
    let write = |name: &str, bytes: &[u8]| {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    };
    write("comparison.json", &summary.to_json())?;
    write("comparison.txt", table.as_bytes())?;
    print!("{table}");
    println!("results in {}", dir.display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, opts, emit_plan } => run(config, opts, *emit_plan),
        Command::Compare { configs, opts } => compare_all(configs, opts),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
