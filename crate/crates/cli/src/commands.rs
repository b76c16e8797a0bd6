//! The three subcommands and the files they write.

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::experiment::{self, Instance, RepSeeds, ResultRow};
use crate::report;
use serde::Serialize;
use serde_json::{json, Value};
use shifterr_core::dataio::{self, SplitScheme, SplitSpec};
use shifterr_core::metrics::{mad_std, mse_std, signed_bias_std};
use shifterr_core::Dataset;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Files written by `simulate`.
#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub dir: PathBuf,
    pub rows: Vec<ResultRow>,
}

/// Runs the configured replications and writes `results.csv`, `summary.csv`,
/// `report.svg` and `manifest.json` into the output directory.
pub fn simulate(config: &ExperimentConfig) -> CliResult<SimulateOutput> {
    let rows = experiment::run(config)?;
    let summary = experiment::summarize(config, &rows);
    let dir = config.output.clone();
    create_dir(&dir)?;
    write_rows(&dir.join("results.csv"), &rows)?;
    write_rows(&dir.join("summary.csv"), &summary)?;
    let names: Vec<&str> = config.estimators.iter().map(|e| e.name()).collect();
    let svg = report::render(
        &format!("{} replications, {} loss", config.reps, config.loss.name()),
        &report::standardized_differences(&rows, &names),
    );
    fs::write(dir.join("report.svg"), svg)?;
    let manifest = json!({
        "command": "simulate",
        "version": VERSION,
        "master_seed": config.seed,
        "config": config,
        "outputs": ["results.csv", "summary.csv", "report.svg"],
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(SimulateOutput { dir, rows })
}

/// Column names used to read the CSVs handed to `estimate`.
#[derive(Debug, Clone)]
pub struct Columns {
    pub outcome: String,
    pub group: Option<String>,
}

/// Loads `path`, keeping the outcome column only if the file has one.
fn load_unlabeled_ok(path: &Path, cols: &Columns) -> CliResult<Dataset> {
    let at = path.display().to_string();
    match dataio::load_csv(path, Some(&cols.outcome), cols.group.as_deref()) {
        Err(shifterr_core::Error::MissingColumn(c)) if c == cols.outcome => {
            dataio::load_csv(path, None, cols.group.as_deref())
                .map_err(|e| CliError::from_core(e, at))
        }
        r => r.map_err(|e| CliError::from_core(e, at)),
    }
}

/// Estimates for a labeled training CSV and a test CSV whose outcomes may be
/// absent. With test outcomes, the realized error and metrics are included.
pub fn estimate(
    config: &ExperimentConfig,
    train: &Path,
    test: &Path,
    cols: &Columns,
) -> CliResult<Value> {
    config.validate()?;
    let train_data = dataio::load_csv(train, Some(&cols.outcome), cols.group.as_deref())
        .map_err(|e| CliError::from_core(e, train.display().to_string()))?;
    let test_data = load_unlabeled_ok(test, cols)?;
    if test_data.p() != train_data.p() {
        return Err(CliError::Config(format!(
            "test has {} features, training has {}",
            test_data.p(),
            train_data.p()
        )));
    }
    let labeled = test_data.y().is_some();
    let seeds = RepSeeds::new(config.seed, 0);
    // The evaluation needs a labeled test set; zeros stand in and are ignored.
    let stand_in = if labeled {
        test_data
    } else {
        test_data
            .with_y(vec![0.0; test_data.n()])
            .map_err(|e| CliError::from_core(e, "test"))?
    };
    let inst = Instance {
        train: train_data,
        test: stand_in,
    };
    let (values, truth) = experiment::evaluate(config, &inst, seeds, config.bootstrap.execution)
        .map_err(|(what, e)| CliError::from_core(e, format!("estimator {what}")))?;
    let estimates: BTreeMap<&str, f64> = values.iter().map(|(e, v)| (e.name(), *v)).collect();
    let mut out = json!({
        "estimates": estimates,
        "B": config.bootstrap.replicates,
        "correction": config.bootstrap.correction,
        "seed": config.seed,
        "version": VERSION,
    });
    if labeled {
        let metrics: BTreeMap<&str, Value> = values
            .iter()
            .map(|(e, v)| {
                let m = |r: shifterr_core::Result<f64>| r.ok().map_or(Value::Null, Value::from);
                let (est, tr) = ([*v], [truth]);
                let row = json!({
                    "signed_bias": m(signed_bias_std(&est, &tr)),
                    "mse_std": m(mse_std(&est, &tr)),
                    "mad_std": m(mad_std(&est, &tr)),
                });
                (e.name(), row)
            })
            .collect();
        out["true_test_error"] = json!(truth);
        out["metrics"] = json!(metrics);
    }
    Ok(out)
}

/// Arguments of `split`.
#[derive(Debug, Clone)]
pub struct SplitArgs {
    pub input: PathBuf,
    pub scheme: SplitScheme,
    pub seed: u64,
    pub train_fraction: f64,
    pub outcome: Option<String>,
    pub group: Option<String>,
    pub out_dir: PathBuf,
}

/// Writes `train.csv`, `test.csv` and `manifest.json` into the output directory.
pub fn split(args: &SplitArgs) -> CliResult<dataio::SplitAssignment> {
    let at = args.input.display().to_string();
    let data = dataio::load_csv(&args.input, args.outcome.as_deref(), args.group.as_deref())
        .map_err(|e| CliError::from_core(e, at.clone()))?;
    let spec = SplitSpec {
        scheme: args.scheme,
        seed: args.seed,
        train_fraction: args.train_fraction,
    };
    let s = dataio::split(&data, &spec).map_err(|e| CliError::from_core(e, at))?;
    create_dir(&args.out_dir)?;
    let outcome = args.outcome.as_deref().unwrap_or("y");
    let group = args.group.as_deref().unwrap_or("group");
    for (name, d) in [("train.csv", &s.train), ("test.csv", &s.test)] {
        dataio::save_csv(args.out_dir.join(name), d, outcome, group)
            .map_err(|e| CliError::from_core(e, name))?;
    }
    let manifest = json!({
        "command": "split",
        "version": VERSION,
        "input": args.input,
        "scheme": spec.scheme,
        "seed": spec.seed,
        "train_fraction": spec.train_fraction,
        "train_rows": s.assignment.train_rows.len(),
        "test_rows": s.assignment.test_rows.len(),
        "groups": s.assignment.group_sides,
    });
    write_json(&args.out_dir.join("manifest.json"), &manifest)?;
    Ok(s.assignment)
}

/// Runs `f` on a pool of `jobs` threads; without the `parallel` feature it
/// runs on the calling thread.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    #[cfg(feature = "parallel")]
    {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = jobs {
            builder = builder.num_threads(n.max(1));
        }
        let pool = builder
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        Ok(f())
    }
}
