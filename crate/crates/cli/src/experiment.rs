//! Outer replications: data, initial fit, realized test error and estimates.

use crate::config::{DataSource, ExperimentConfig};
use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use shifterr_core::dataio::{self, SplitSpec};
use shifterr_core::metrics::{true_test_error, ComparisonRow};
use shifterr_core::rng::{tag, SeedStream};
use shifterr_core::simgen::{gen_linear, gen_logistic, DgpSpec};
use shifterr_core::{
    cv_error, errx_both, errx_dir, make_folds, models, BootstrapConfig, Dataset, Estimator,
    Execution,
};

/// One estimator's value in one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub rep: usize,
    pub estimator: String,
    pub estimate: f64,
    pub true_test_error: f64,
}

/// Labeled training data and the test set an estimator is judged on.
#[derive(Debug, Clone)]
pub struct Instance {
    pub train: Dataset,
    pub test: Dataset,
}

/// Seeds of one replication, all derived from the master seed.
#[derive(Debug, Clone, Copy)]
pub struct RepSeeds {
    pub data: u64,
    pub bootstrap: u64,
    pub folds: u64,
}

impl RepSeeds {
    pub fn new(master: u64, rep: usize) -> Self {
        let s = SeedStream::new(master).child2(tag::REP, rep as u64);
        Self {
            data: s.child(tag::DGP).seed(),
            bootstrap: s.child(tag::BOOTSTRAP).seed(),
            folds: s.child(tag::CV).seed(),
        }
    }
}

/// Source of per-replication instances; a CSV is loaded once and re-split.
#[derive(Debug, Clone)]
pub enum Source {
    Simulated(DgpSpec),
    Table { data: Dataset, split: SplitSpec },
}

impl Source {
    pub fn from_config(config: &ExperimentConfig) -> CliResult<Self> {
        match &config.data {
            None => Err(CliError::Config(
                "`data` is required to run experiments".into(),
            )),
            Some(DataSource::Simulate(dgp)) => Ok(Source::Simulated(dgp.clone())),
            Some(DataSource::Csv(src)) => {
                let data = dataio::load_csv(&src.path, Some(&src.outcome), src.group.as_deref())
                    .map_err(|e| CliError::from_core(e, src.path.display().to_string()))?;
                Ok(Source::Table {
                    data,
                    split: src.split.clone(),
                })
            }
        }
    }

    pub fn instance(&self, seed: u64) -> shifterr_core::Result<Instance> {
        match self {
            Source::Simulated(dgp) => {
                let spec = DgpSpec {
                    seed,
                    ..dgp.clone()
                };
                let sim = if dgp.sigma.is_some() {
                    gen_linear(&spec)?
                } else {
                    gen_logistic(&spec)?
                };
                Ok(Instance {
                    train: sim.train,
                    test: sim.test,
                })
            }
            Source::Table { data, split } => {
                let s = dataio::split(
                    data,
                    &SplitSpec {
                        seed,
                        ..split.clone()
                    },
                )?;
                Ok(Instance {
                    train: s.train,
                    test: s.test,
                })
            }
        }
    }
}

/// `(estimator, value)` pairs in configuration order and the realized test error.
pub type Evaluation = (Vec<(Estimator, f64)>, f64);

/// What failed, and why.
pub type Failure = (String, shifterr_core::Error);

/// Runs every requested estimator on one instance.
pub fn evaluate(
    config: &ExperimentConfig,
    inst: &Instance,
    seeds: RepSeeds,
    execution: Execution,
) -> Result<Evaluation, Failure> {
    let fit = models::fit(&inst.train, &config.fit).map_err(|e| ("initial fit".to_string(), e))?;
    let truth = true_test_error(&fit.model, &inst.test, config.loss)
        .map_err(|e| ("true test error".to_string(), e))?;
    let boot = BootstrapConfig {
        seed: seeds.bootstrap,
        execution,
        ..config.bootstrap.clone()
    };
    let x_test = inst.test.x();
    let both = if config.wants(Estimator::ErrXdec) {
        let r = errx_both(
            &inst.train,
            x_test,
            &config.fit,
            config.loss,
            &boot,
            config.insample(),
        )
        .map_err(|e| (Estimator::ErrXdec.name().to_string(), e))?;
        Some(r)
    } else {
        None
    };
    let mut out = Vec::with_capacity(config.estimators.len());
    for &est in &config.estimators {
        let wrap = |e| (est.name().to_string(), e);
        let value = match est {
            Estimator::Cv => {
                let plan = make_folds(
                    inst.train.n(),
                    config.cv_folds,
                    inst.train.groups(),
                    seeds.folds,
                )
                .map_err(wrap)?;
                cv_error(&inst.train, &config.fit, config.loss, &plan)
                    .map_err(wrap)?
                    .value
            }
            Estimator::ErrXdir => match &both {
                Some(r) => r.dir.value,
                None => {
                    errx_dir(&inst.train, x_test, &config.fit, config.loss, &boot)
                        .map_err(wrap)?
                        .value
                }
            },
            Estimator::ErrXdec => both.as_ref().expect("computed above").dec.value,
            Estimator::ClosedFormOls => unreachable!("rejected by config validation"),
        };
        out.push((est, value));
    }
    Ok((out, truth))
}

/// Per-replication rows of a full run, in replication order.
pub fn run(config: &ExperimentConfig) -> CliResult<Vec<ResultRow>> {
    config.validate()?;
    let source = Source::from_config(config)?;
    let results = shifterr_core::par::map_range(config.reps, Execution::Parallel, |rep| {
        let seeds = RepSeeds::new(config.seed, rep);
        let inst = source
            .instance(seeds.data)
            .map_err(|e| ("data".to_string(), e))?;
        evaluate(config, &inst, seeds, config.bootstrap.execution)
    });
    let mut rows = Vec::with_capacity(config.reps * config.estimators.len());
    for (rep, r) in results.into_iter().enumerate() {
        let (values, truth) =
            r.map_err(|(what, e)| CliError::from_core(e, format!("rep {rep}, estimator {what}")))?;
        rows.extend(values.into_iter().map(|(est, v)| ResultRow {
            rep,
            estimator: est.name().to_string(),
            estimate: v,
            true_test_error: truth,
        }));
    }
    Ok(rows)
}

/// Summary row per estimator in configuration order. Metrics are NaN when
/// the mean realized test error is zero.
pub fn summarize(config: &ExperimentConfig, rows: &[ResultRow]) -> Vec<ComparisonRow> {
    config
        .estimators
        .iter()
        .map(|est| {
            let (e, t): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.estimator == est.name())
                .map(|r| (r.estimate, r.true_test_error))
                .unzip();
            ComparisonRow::new(est.name(), &e, &t).unwrap_or(ComparisonRow {
                estimator: est.name().to_string(),
                signed_bias: f64::NAN,
                mse_std: f64::NAN,
                mad_std: f64::NAN,
                n_reps: e.len(),
            })
        })
        .collect()
}
