//! Experiment configuration read from JSON.

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use shifterr_core::dataio::SplitSpec;
use shifterr_core::simgen::DgpSpec;
use shifterr_core::{BootstrapConfig, Estimator, FitSpec, InSampleMethod, LossKind};
use std::path::{Path, PathBuf};

/// Environment variable that replaces the configured master seed.
pub const SEED_ENV: &str = "SHIFTERR_SEED";

/// Seed from the environment override, if set.
pub fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{SEED_ENV}=`{raw}` is not a u64"))),
        Err(_) => Ok(None),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Fresh synthetic data per replication.
    Simulate(DgpSpec),
    /// A labeled CSV split anew per replication.
    Csv(CsvSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub path: PathBuf,
    #[serde(default = "default_outcome")]
    pub outcome: String,
    #[serde(default)]
    pub group: Option<String>,
    pub split: SplitSpec,
}

fn default_outcome() -> String {
    "y".into()
}

fn default_folds() -> usize {
    10
}

fn default_reps() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Required by `simulate`; `estimate` and `split` take data from flags.
    #[serde(default)]
    pub data: Option<DataSource>,
    pub fit: FitSpec,
    pub loss: LossKind,
    pub estimators: Vec<Estimator>,
    /// Replicate count and correction. Its seed is replaced by one derived
    /// from the master seed.
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    /// In-sample estimator for ErrX.dec; chosen from the fit and loss when absent.
    #[serde(default)]
    pub insample_method: Option<InSampleMethod>,
    /// Folds of the CV error estimate.
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    /// Master seed of every random stream in a run.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies the seed override from the environment, if set.
    pub fn with_env_seed(mut self) -> CliResult<Self> {
        if let Some(seed) = env_seed()? {
            self.seed = seed;
        }
        Ok(self)
    }

    pub fn insample(&self) -> InSampleMethod {
        self.insample_method
            .unwrap_or_else(|| InSampleMethod::default_for(&self.fit, self.loss))
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.estimators.is_empty() {
            return bad("at least one estimator is required".into());
        }
        if let Some(e) = self
            .estimators
            .iter()
            .find(|e| **e == Estimator::ClosedFormOls)
        {
            return bad(format!("estimator `{e}` is not available in experiments"));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.cv_folds < 2 {
            return bad(format!(
                "cv_folds must be at least 2, got {}",
                self.cv_folds
            ));
        }
        let core = |r: shifterr_core::Result<()>, what: &str| {
            r.map_err(|e| CliError::Config(format!("{what}: {e}")))
        };
        core(self.fit.validate(), "fit")?;
        core(self.bootstrap.validate(), "bootstrap")?;
        core(self.loss.check(self.fit.algorithm.model_kind()), "loss")?;
        if let Some(DataSource::Simulate(dgp)) = &self.data {
            core(dgp.validate(), "data.simulate")?;
            if dgp.sigma.is_some()
                != (self.fit.algorithm.model_kind() == shifterr_core::ModelKind::GaussianLinear)
            {
                return bad("data.simulate.sigma must be set exactly for linear fits".into());
            }
        }
        Ok(())
    }

    pub fn wants(&self, e: Estimator) -> bool {
        self.estimators.contains(&e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        r#"{"fit": {"algorithm": "ols"}, "loss": "squared", "estimators": ["CV", "ErrX.dir"]}"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!((c.reps, c.cv_folds, c.seed), (1, 10, 0));
        assert_eq!(c.bootstrap.replicates, 500);
        assert_eq!(c.insample(), InSampleMethod::CpOls);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_fields_and_empty_estimators() {
        assert!(ExperimentConfig::from_json(&MINIMAL.replace("\"loss\"", "\"los\"")).is_err());
        let c =
            ExperimentConfig::from_json(&MINIMAL.replace("[\"CV\", \"ErrX.dir\"]", "[]")).unwrap();
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn counting_loss_needs_a_classifier() {
        let c = ExperimentConfig::from_json(&MINIMAL.replace("squared", "counting")).unwrap();
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
    }
}
