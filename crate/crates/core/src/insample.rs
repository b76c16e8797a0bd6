//! In-sample error estimates: Mallows-type Cp and bootstrap covariance penalties.

use crate::bootstrap::{self, Generator, Needs, Replicate};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::errx::BootstrapConfig;
use crate::loss::{point_predictions, LossKind};
use crate::models::{FitAlgorithm, FitResult, FitSpec, ModelKind};
use serde::{Deserialize, Serialize};

pub use crate::bootstrap::covariance_terms;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InSampleMethod {
    CpOls,
    CpLasso,
    CovPenaltyBootstrap,
    CountingPenaltyLogistic,
}

impl InSampleMethod {
    /// Method paired with a fitting algorithm and loss when none is configured.
    pub fn default_for(spec: &FitSpec, loss: LossKind) -> Self {
        match (spec.algorithm, loss) {
            (_, LossKind::Counting) => InSampleMethod::CountingPenaltyLogistic,
            (FitAlgorithm::Ols, _) => InSampleMethod::CpOls,
            (FitAlgorithm::LassoCv | FitAlgorithm::RelaxedLasso, _) => InSampleMethod::CpLasso,
            (FitAlgorithm::LogisticL1, _) => InSampleMethod::CovPenaltyBootstrap,
        }
    }

    pub(crate) fn uses_replicates(self) -> bool {
        matches!(
            self,
            InSampleMethod::CovPenaltyBootstrap | InSampleMethod::CountingPenaltyLogistic
        )
    }
}

/// `value = training_loss + penalty_term`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InSampleEstimate {
    pub value: f64,
    pub method: InSampleMethod,
    pub training_loss: f64,
    pub penalty_term: f64,
}

impl InSampleEstimate {
    fn new(method: InSampleMethod, training_loss: f64, penalty_term: f64) -> Self {
        Self {
            value: training_loss + penalty_term,
            method,
            training_loss,
            penalty_term,
        }
    }
}

fn gaussian_cp(
    data: &Dataset,
    fit: &FitResult,
    df: usize,
    method: InSampleMethod,
) -> Result<InSampleEstimate> {
    if fit.model.kind != ModelKind::GaussianLinear {
        return Err(Error::IncompatibleLoss {
            loss: LossKind::Squared.name(),
            model: fit.model.kind.name(),
        });
    }
    let sigma2 = fit.model.sigma2.ok_or(Error::MissingSigma)?;
    let n = data.n() as f64;
    Ok(InSampleEstimate::new(
        method,
        fit.training_residual_ss / n,
        2.0 * df as f64 * sigma2 / n,
    ))
}

/// `RSS/n + 2pσ̂²/n`.
pub fn cp_ols(data: &Dataset, fit: &FitResult) -> Result<InSampleEstimate> {
    gaussian_cp(data, fit, data.p(), InSampleMethod::CpOls)
}

/// `RSS/n + 2ŝσ̂²/n` with ŝ the number of nonzero coefficients.
pub fn cp_lasso(data: &Dataset, fit: &FitResult) -> Result<InSampleEstimate> {
    gaussian_cp(data, fit, fit.active_count, InSampleMethod::CpLasso)
}

/// Squared-error covariance penalty from refits on bootstrap outcomes.
pub fn cov_penalty_bootstrap(
    data: &Dataset,
    spec: &FitSpec,
    config: &BootstrapConfig,
) -> Result<InSampleEstimate> {
    bootstrap_penalty(
        data,
        spec,
        config,
        LossKind::Squared,
        InSampleMethod::CovPenaltyBootstrap,
    )
}

/// Counting-error covariance penalty; predictions are the thresholded classes.
pub fn counting_penalty_logistic(
    data: &Dataset,
    spec: &FitSpec,
    config: &BootstrapConfig,
) -> Result<InSampleEstimate> {
    bootstrap_penalty(
        data,
        spec,
        config,
        LossKind::Counting,
        InSampleMethod::CountingPenaltyLogistic,
    )
}

fn bootstrap_penalty(
    data: &Dataset,
    spec: &FitSpec,
    config: &BootstrapConfig,
    loss: LossKind,
    method: InSampleMethod,
) -> Result<InSampleEstimate> {
    config.validate()?;
    loss.check(spec.algorithm.model_kind())?;
    let gen = Generator::new(data, spec, config.correction)?;
    let reps = bootstrap::run(
        &gen,
        loss,
        Needs {
            keep_train: true,
            ..Needs::default()
        },
        config,
    )?;
    from_replicates(data, &gen.fit, &reps, loss, method)
}

pub(crate) fn from_replicates(
    data: &Dataset,
    fit: &FitResult,
    reps: &[Replicate],
    loss: LossKind,
    method: InSampleMethod,
) -> Result<InSampleEstimate> {
    let y = data.require_y()?;
    let training_loss = loss.mean(y, &point_predictions(&fit.model, data.x(), loss)?);
    let ys: Vec<&[f64]> = reps.iter().map(|r| r.y.as_slice()).collect();
    let preds: Vec<&[f64]> = reps.iter().map(|r| r.train_pred.as_slice()).collect();
    let penalty = 2.0 * covariance_terms(&ys, &preds).iter().sum::<f64>() / data.n() as f64;
    Ok(InSampleEstimate::new(method, training_loss, penalty))
}

/// Dispatches to the named method. Cp variants use the initial fit of `spec`.
pub fn estimate(
    data: &Dataset,
    spec: &FitSpec,
    loss: LossKind,
    config: &BootstrapConfig,
    method: InSampleMethod,
) -> Result<InSampleEstimate> {
    match method {
        InSampleMethod::CpOls => cp_ols(data, &crate::models::fit(data, spec)?),
        InSampleMethod::CpLasso => cp_lasso(data, &crate::models::fit(data, spec)?),
        InSampleMethod::CovPenaltyBootstrap => bootstrap_penalty(
            data,
            spec,
            config,
            loss,
            InSampleMethod::CovPenaltyBootstrap,
        ),
        InSampleMethod::CountingPenaltyLogistic => counting_penalty_logistic(data, spec, config),
    }
}
