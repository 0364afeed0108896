//! Command-line front end: each subcommand loads the shared TOML config, runs one
//! experiment (or summarizes previous runs), prints the report, and exits 0 only
//! when every check passed. Exit code 2 marks usage or configuration problems.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tasep_shock::clockwork::{generate_events, EventStream};
use tasep_shock::engine::streaming::StreamingSystem;
use tasep_shock::harness::{
    ensure_dir, load_report, run_geodesic_suite, run_identity_suite, run_limit_comparison,
    run_scaling_experiment, write_csv, write_law_table, ExperimentConfig, HarnessError,
};
use tasep_shock::tracker::{with_tagged_origin, ShockSetup};

#[derive(Parser)]
#[command(name = "tasep-shock", version, about = "Shock-front TASEP experiments")]
struct Cli {
    /// Experiment configuration file (TOML).
    #[arg(long, global = true, default_value = "tasep.toml")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one tagged trajectory; write its positions, the final state, and
    /// optionally the event stream it consumed.
    Simulate {
        /// Trajectory seed (defaults to the config's seed base).
        #[arg(long)]
        seed: Option<u64>,
        /// Dump the trajectory's event stream to this path (binary, replayable).
        #[arg(long)]
        dump_events: Option<PathBuf>,
    },
    /// Check the particle-height identity pathwise over a batch of seeds.
    VerifyIdentity {
        /// Seed count override (defaults to the config's sample count).
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Backwards-path diagnostics: reconstruction, ordering, domination, tails.
    Geodesics,
    /// Variance growth of the tracked front position across the time grid.
    Scaling,
    /// Rescaled front position against the tabulated limit law.
    LimitLaw,
    /// Write a tabulated law to CSV (deterministic output).
    FredholmTables {
        /// Which law to tabulate: gue, goe, or shock.
        #[arg(long)]
        law: String,
        /// Destination path (defaults to <output_dir>/<law>-table.csv).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Summarize every report in the output directory.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match ExperimentConfig::from_toml_path(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match dispatch(&cli.command, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: &Command, cfg: &ExperimentConfig) -> Result<bool, HarnessError> {
    match command {
        Command::Simulate { seed, dump_events } => {
            simulate(cfg, seed.unwrap_or(cfg.seed_base), dump_events.as_deref())
        }
        Command::VerifyIdentity { seeds } => {
            let mut cfg = cfg.clone();
            if let Some(n) = seeds {
                cfg.samples = *n;
            }
            let report = run_identity_suite(&cfg)?;
            println!("{}", report.summary());
            Ok(report.passed)
        }
        Command::Geodesics => {
            let report = run_geodesic_suite(cfg)?;
            println!("{}", report.summary());
            Ok(report.passed)
        }
        Command::Scaling => {
            let report = run_scaling_experiment(cfg)?;
            println!("{}", report.summary());
            Ok(report.passed)
        }
        Command::LimitLaw => {
            let report = run_limit_comparison(cfg)?;
            println!("{}", report.summary());
            Ok(report.passed)
        }
        Command::FredholmTables { law, output } => {
            let path = write_law_table(cfg, law, output.as_deref())?;
            println!("wrote {}", path.display());
            Ok(true)
        }
        Command::Report => summarize(cfg),
    }
}

fn simulate(cfg: &ExperimentConfig, seed: u64, dump: Option<&Path>) -> Result<bool, HarnessError> {
    let t_final = *cfg.t_grid.last().unwrap();
    let setup = ShockSetup {
        lambda: cfg.lambda,
        rho: cfg.rho,
        deterministic_ic: cfg.deterministic_ic,
        t_final,
    };
    let tagged = with_tagged_origin(&setup.base_config(seed)?)?;
    let mut sys = StreamingSystem::new(seed, vec![tagged], Some(t_final))?;
    let dir = cfg.resolved_output_dir();
    ensure_dir(&dir)?;
    let mut rows = Vec::with_capacity(cfg.t_grid.len());
    for &t in &cfg.t_grid {
        sys.evolve_to(t)?;
        let pos = sys.member(0).second_positions()[0];
        let dirty = setup.contaminated(pos, t)?;
        rows.push(format!("{t:.6e},{pos},{dirty}"));
        println!("t = {t:>9.1}   tracked position = {pos}");
    }
    write_csv(
        dir.join(format!("{}-trajectory.csv", cfg.experiment)),
        "t,position,contaminated",
        &rows,
    )?;
    let snapshot = sys.member(0).configuration().to_rle();
    fs::write(
        dir.join(format!("{}-final-state.rle", cfg.experiment)),
        snapshot,
    )?;
    if let Some(path) = dump {
        let stream = generate_events(seed, setup.window()?, t_final)?;
        stream.dump_to_path(path)?;
        EventStream::load_from_path(path)?;
        println!("event stream written to {}", path.display());
    }
    Ok(true)
}

fn summarize(cfg: &ExperimentConfig) -> Result<bool, HarnessError> {
    let dir = cfg.resolved_output_dir();
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| {
            HarnessError::Report(format!("cannot read output dir {}: {e}", dir.display()))
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with("-report.json"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        eprintln!("no reports found in {}", dir.display());
        return Ok(false);
    }
    let mut all = true;
    for path in &paths {
        let report = load_report(path)?;
        println!("{}", report.summary());
        println!();
        all &= report.passed;
    }
    println!(
        "{} reports, overall: {}",
        paths.len(),
        if all { "PASS" } else { "FAIL" }
    );
    Ok(all)
}
