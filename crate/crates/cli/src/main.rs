//! `driftlane` command-line driver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use driftlane::experiment::{self, ExperimentSpec};
use driftlane::ingest::write_meta_csv;
use driftlane::synth::{gen_corridor, CorridorConfig};
use driftlane::{report, Error};

/// Output directory used when neither the spec nor the environment names one.
const FALLBACK_OUT: &str = "driftlane-out";

#[derive(Parser)]
#[command(
    name = "driftlane",
    version,
    about = "Congestion-level stream learning experiments"
)]
struct Cli {
    /// Parallel runs (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Replace the spec's seed list with this single seed.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Only log errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every method x mode x horizon x seed in a spec.
    Run { spec: PathBuf },
    /// Generate a synthetic corridor CSV and its metadata CSV.
    Synth { config: PathBuf, out: PathBuf },
    /// Summarize a results.csv as a Markdown table and SVG charts.
    Report { results: PathBuf, out_dir: PathBuf },
}

/// Exit status: 0 success, 1 partial failure or I/O error, 2 bad input.
enum Outcome {
    Ok,
    Partial(String),
    Invalid(String),
}

/// `out.csv` -> `out.meta.csv`.
fn meta_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.meta.csv"))
}

fn output_dir(spec: &ExperimentSpec) -> PathBuf {
    spec.output_dir
        .clone()
        .or_else(|| std::env::var_os("DRIFTLANE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT))
}

fn cmd_run(path: &Path, workers: usize, seed: Option<u64>) -> Outcome {
    let mut spec = match ExperimentSpec::load(path) {
        Ok(s) => s,
        Err(e) => return Outcome::Invalid(e.to_string()),
    };
    if let Some(s) = seed {
        spec.override_seed(s);
    }
    let data = match experiment::load_dataset(&spec) {
        Ok(d) => d,
        Err(e) => return Outcome::Invalid(e.to_string()),
    };
    let out = output_dir(&spec);
    let outcomes = match experiment::execute(&spec, &data, workers) {
        Ok(o) => o,
        Err(e) => return Outcome::Invalid(e.to_string()),
    };
    match experiment::write_outputs(&spec, &outcomes, &out) {
        Ok(m) if m.n_failed == 0 => {
            log::info!("{} runs written to {}", m.n_runs, out.display());
            Outcome::Ok
        }
        Ok(m) => Outcome::Partial(format!(
            "{} of {} runs failed; see {}",
            m.n_failed,
            m.n_runs,
            out.join(experiment::MANIFEST_FILE).display()
        )),
        Err(e) => Outcome::Partial(e.to_string()),
    }
}

fn cmd_synth(config: &Path, out: &Path, seed: Option<u64>) -> Outcome {
    let parsed = std::fs::read_to_string(config)
        .map_err(Error::from)
        .and_then(|t| serde_json::from_str::<CorridorConfig>(&t).map_err(Error::from));
    let mut cfg = match parsed {
        Ok(c) => c,
        Err(e) => return Outcome::Invalid(format!("{}: {e}", config.display())),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let corridor = match gen_corridor(&cfg) {
        Ok(c) => c,
        Err(e) => return Outcome::Invalid(format!("{}: {e}", config.display())),
    };
    let write = || -> driftlane::Result<()> {
        let mut data = Vec::new();
        corridor.matrix.write_csv(&mut data)?;
        let mut meta = Vec::new();
        write_meta_csv(&corridor.meta, &mut meta)?;
        experiment::write_atomic(out, &data)?;
        experiment::write_atomic(&meta_path(out), &meta)
    };
    match write() {
        Ok(()) => Outcome::Ok,
        Err(e) => Outcome::Partial(e.to_string()),
    }
}

fn cmd_report(results: &Path, out_dir: &Path) -> Outcome {
    let rows = match report::load_results(results) {
        Ok(r) if !r.is_empty() => r,
        Ok(_) => return Outcome::Invalid(format!("{}: no result rows", results.display())),
        Err(e) => return Outcome::Invalid(e.to_string()),
    };
    match report::write_report(&rows, out_dir) {
        Ok(files) => {
            log::info!("{} files written to {}", files.len(), out_dir.display());
            Outcome::Ok
        }
        Err(e) => Outcome::Partial(e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match &cli.command {
        Command::Run { spec } => cmd_run(spec, cli.workers, cli.seed_override),
        Command::Synth { config, out } => cmd_synth(config, out, cli.seed_override),
        Command::Report { results, out_dir } => cmd_report(results, out_dir),
    };
    match outcome {
        Outcome::Ok => ExitCode::SUCCESS,
        Outcome::Partial(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Outcome::Invalid(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
