use clap::{Parser, Subcommand};
use shifterr::commands::{self, Columns, SplitArgs};
use shifterr::config::env_seed;
use shifterr::{CliResult, ExperimentConfig};
use shifterr_core::dataio::SplitScheme;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "shifterr",
    version,
    about = "Prediction-error estimates under covariate shift"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replicated experiments and write results, summary, report and manifest.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        /// Worker threads for outer replications and bootstrap refits.
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the test error of a model trained on one CSV for the rows of another.
    Estimate {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long, default_value = "y")]
        outcome: String,
        #[arg(long = "group-col")]
        group_col: Option<String>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Also write the JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a CSV into training and test files.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_scheme)]
        scheme: SplitScheme,
        #[arg(long = "group-col")]
        group_col: Option<String>,
        /// Outcome column, carried through unchanged.
        #[arg(long)]
        outcome: Option<String>,
        /// Defaults to SHIFTERR_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.5)]
        train_fraction: f64,
        #[arg(long, default_value = "split")]
        out: PathBuf,
    },
}

fn parse_scheme(s: &str) -> Result<SplitScheme, String> {
    s.parse().map_err(|e: shifterr_core::Error| e.to_string())
}

fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    ExperimentConfig::load(path)?.with_env_seed()
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { config, jobs, out } => {
            let mut config = load_config(&config)?;
            if let Some(out) = out {
                config.output = out;
            }
            let done = commands::with_jobs(jobs, || commands::simulate(&config))??;
            eprintln!("wrote {} rows to {}", done.rows.len(), done.dir.display());
        }
        Command::Estimate {
            train,
            test,
            config,
            outcome,
            group_col,
            jobs,
            out,
        } => {
            let config = load_config(&config)?;
            let cols = Columns {
                outcome,
                group: group_col,
            };
            let value =
                commands::with_jobs(jobs, || commands::estimate(&config, &train, &test, &cols))??;
            let text = serde_json::to_string_pretty(&value)?;
            println!("{text}");
            if let Some(path) = out {
                std::fs::write(&path, format!("{text}\n"))?;
            }
        }
        Command::Split {
            input,
            scheme,
            group_col,
            outcome,
            seed,
            train_fraction,
            out,
        } => {
            let seed = match seed {
                Some(s) => s,
                None => env_seed()?.unwrap_or(0),
            };
            let args = SplitArgs {
                input,
                scheme,
                seed,
                train_fraction,
                outcome,
                group: group_col,
                out_dir: out,
            };
            let a = commands::split(&args)?;
            eprintln!(
                "train {} rows, test {} rows",
                a.train_rows.len(),
                a.test_rows.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shifterr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
