use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use whitham_core::harness::{run_experiment, write_outputs, ExperimentConfig, ExperimentKind, RunReport};
use whitham_core::Error;

#[derive(Parser)]
#[command(name = "whitham-val", version, about = "Validation experiments for the Whitham modulation approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (or `all`) and write report.json and curves.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the experiment named in the config; `all` runs every one.
        #[arg(long)]
        experiment: Option<String>,
        /// Output directory; defaults to the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config file.
    ValidateConfig { path: PathBuf },
}

const EXIT_FAIL: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn run(
    config: PathBuf,
    experiment: Option<String>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    seed: Option<u64>,
) -> Result<bool, Error> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(seed) = seed {
        cfg.experiment.rng_seed = seed;
    }
    let kinds = match experiment.as_deref() {
        None => vec![cfg.experiment.name],
        Some("all") => ExperimentKind::ALL.to_vec(),
        Some(name) => vec![ExperimentKind::parse(name)?],
    };
    let out = out.unwrap_or_else(|| cfg.experiment.output_dir.clone());
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let reports: Vec<RunReport> = pool.install(|| {
        kinds
            .iter()
            .map(|&kind| {
                let mut c = cfg.clone();
                c.experiment.name = kind;
                run_experiment(&c, kind)
            })
            .collect()
    });
    write_outputs(&out, &reports)?;
    for r in &reports {
        for c in &r.checks {
            println!("{:<22} {:<44} {:>24} {:<14} {}", r.experiment.name(), c.name, format!("{:.6e}", c.value), c.rule, if c.passed { "PASS" } else { "FAIL" });
        }
        for run in r.runs.iter().filter(|x| x.error.is_some()) {
            println!("{:<22} run {} failed: {}", r.experiment.name(), run.label, run.error.as_ref().map(|e| e.message.as_str()).unwrap_or(""));
        }
        if let Some(e) = &r.error {
            println!("{:<22} error: {}", r.experiment.name(), e.message);
        }
    }
    if let Some(e) = reports.iter().find_map(|r| r.error.as_ref()) {
        return Err(Error::InvalidArgument(e.message.clone()));
    }
    println!("wrote {}", out.display());
    Ok(reports.iter().all(RunReport::passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ValidateConfig { path } => match ExperimentConfig::load(&path) {
            Ok(_) => {
                println!("{}: ok", path.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                ExitCode::from(EXIT_ERROR)
            }
        },
        Command::Run { config, experiment, out, threads, seed } => match run(config, experiment, out, threads, seed) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(EXIT_FAIL),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_ERROR)
            }
        },
    }
}
