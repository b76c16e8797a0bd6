//! Parametric-bootstrap estimates of the error of a fitted model on a given
//! set of test covariates, with optional shrinkage corrections.

use crate::bootstrap::{self, Generator, Needs, Replicate};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::insample::{self, InSampleEstimate, InSampleMethod};
use crate::linalg::{norm_sq, Cholesky, Matrix};
use crate::loss::LossKind;
use crate::models::{FitSpec, SINGULAR_TOL};
use crate::par::Execution;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    #[default]
    None,
    Multiplicative,
    RelaxedLasso,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    /// Number of bootstrap replicates B.
    #[serde(alias = "B")]
    pub replicates: usize,
    pub seed: u64,
    pub correction: Correction,
    /// Bound on the multiplicative factor and its reciprocal.
    pub cap_c: f64,
    pub execution: Execution,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 500,
            seed: 0,
            correction: Correction::None,
            cap_c: 5.0,
            execution: Execution::default(),
        }
    }
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            ..Self::default()
        }
    }

    pub fn with_correction(mut self, correction: Correction) -> Self {
        self.correction = correction;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidInput(format!(
                "need B >= 2 replicates, got {}",
                self.replicates
            )));
        }
        if !(self.cap_c >= 1.0 && self.cap_c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "cap_c must be a finite value >= 1, got {}",
                self.cap_c
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "ErrX.dir")]
    ErrXdir,
    #[serde(rename = "ErrX.dec")]
    ErrXdec,
    #[serde(rename = "CV")]
    Cv,
    #[serde(rename = "closed_form_ols")]
    ClosedFormOls,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::ErrXdir => "ErrX.dir",
            Estimator::ErrXdec => "ErrX.dec",
            Estimator::Cv => "CV",
            Estimator::ClosedFormOls => "closed_form_ols",
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    /// Final estimate, clamped at zero.
    pub value: f64,
    /// One value per surviving replicate; their mean times the correction
    /// factor is the unclamped estimate.
    pub replicate_values: Vec<f64>,
    pub estimator: Estimator,
    pub correction_factor: f64,
}

/// Both bootstrap estimates computed from one shared set of replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrxReport {
    pub dir: ErrorEstimate,
    pub dec: ErrorEstimate,
    pub insample: InSampleEstimate,
    /// Mean over replicates of test loss minus fresh in-sample loss.
    pub difference_term: f64,
}

/// `c = ‖θ̂‖² / mean_b ‖θ̂^(b)‖²`, clamped to `[1/cap, cap]`; 1 when the
/// bootstrap norms are all zero.
pub fn multiplicative_factor(theta_hat: &[f64], bootstrap_thetas: &[Vec<f64>], cap: f64) -> f64 {
    let norms: Vec<f64> = bootstrap_thetas.iter().map(|t| norm_sq(t)).collect();
    factor_from_norms(norm_sq(theta_hat), &norms, cap)
}

fn factor_from_norms(theta_norm_sq: f64, bootstrap_norms_sq: &[f64], cap: f64) -> f64 {
    assert!(!bootstrap_norms_sq.is_empty(), "no bootstrap coefficients");
    let mean = bootstrap_norms_sq.iter().sum::<f64>() / bootstrap_norms_sq.len() as f64;
    if mean == 0.0 {
        return 1.0;
    }
    (theta_norm_sq / mean).clamp(1.0 / cap, cap)
}

/// `σ² + (σ²/n)·tr(Σ̂⁻¹Σ)` with `Σ̂ = XᵀX/n`.
pub fn closed_form_ols_errx(sigma2: f64, x_train: &Matrix, sigma_test: &Matrix) -> Result<f64> {
    let p = x_train.ncols();
    if sigma_test.nrows() != p || sigma_test.ncols() != p {
        return Err(Error::ShapeMismatch(format!(
            "test covariance is {}x{}, design has {p} columns",
            sigma_test.nrows(),
            sigma_test.ncols()
        )));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::InvalidInput("sigma2 must be nonnegative".into()));
    }
    let n = x_train.nrows() as f64;
    let inv = Cholesky::new(&x_train.gram().scale(1.0 / n), SINGULAR_TOL)?.inverse();
    Ok(sigma2 + sigma2 / n * inv.matmul(sigma_test).trace())
}

fn check(
    train: &Dataset,
    x_test: &Matrix,
    spec: &FitSpec,
    loss: LossKind,
    config: &BootstrapConfig,
) -> Result<()> {
    config.validate()?;
    loss.check(spec.algorithm.model_kind())?;
    if x_test.ncols() != train.p() {
        return Err(Error::ShapeMismatch(format!(
            "test covariates have {} columns, training {}",
            x_test.ncols(),
            train.p()
        )));
    }
    if x_test.nrows() == 0 {
        return Err(Error::InvalidInput("empty test covariate matrix".into()));
    }
    Ok(())
}

fn finish(values: Vec<f64>, estimator: Estimator, factor: f64) -> ErrorEstimate {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    ErrorEstimate {
        value: (factor * mean).max(0.0),
        replicate_values: values,
        estimator,
        correction_factor: factor,
    }
}

fn correction_factor(gen: &Generator<'_>, reps: &[Replicate], config: &BootstrapConfig) -> f64 {
    match config.correction {
        Correction::Multiplicative => {
            let norms: Vec<f64> = reps.iter().map(|r| r.theta_norm_sq).collect();
            factor_from_norms(norm_sq(&gen.fit.model.theta), &norms, config.cap_c)
        }
        Correction::None | Correction::RelaxedLasso => 1.0,
    }
}

/// Direct estimate: mean over replicates of the refit's loss on bootstrap
/// test outcomes.
pub fn errx_dir(
    train: &Dataset,
    x_test: &Matrix,
    spec: &FitSpec,
    loss: LossKind,
    config: &BootstrapConfig,
) -> Result<ErrorEstimate> {
    check(train, x_test, spec, loss, config)?;
    let gen = Generator::new(train, spec, config.correction)?;
    let reps = bootstrap::run(
        &gen,
        loss,
        Needs {
            x_test: Some(x_test),
            ..Needs::default()
        },
        config,
    )?;
    let factor = correction_factor(&gen, &reps, config);
    Ok(finish(
        reps.iter().map(|r| r.test_loss).collect(),
        Estimator::ErrXdir,
        factor,
    ))
}

/// Decomposition estimate: in-sample estimate plus the mean gap between the
/// refit's bootstrap test loss and its loss on fresh outcomes at `X`.
pub fn errx_dec(
    train: &Dataset,
    x_test: &Matrix,
    spec: &FitSpec,
    loss: LossKind,
    config: &BootstrapConfig,
    method: InSampleMethod,
) -> Result<ErrorEstimate> {
    Ok(errx_both(train, x_test, spec, loss, config, method)?.dec)
}

/// Runs one replicate set and derives both estimates from it. Results equal
/// those of [`errx_dir`] and [`errx_dec`] called with the same inputs.
pub fn errx_both(
    train: &Dataset,
    x_test: &Matrix,
    spec: &FitSpec,
    loss: LossKind,
    config: &BootstrapConfig,
    method: InSampleMethod,
) -> Result<ErrxReport> {
    check(train, x_test, spec, loss, config)?;
    let gen = Generator::new(train, spec, config.correction)?;
    let needs = Needs {
        x_test: Some(x_test),
        fresh_in: true,
        keep_train: method.uses_replicates(),
    };
    let reps = bootstrap::run(&gen, loss, needs, config)?;
    let insample = match method {
        InSampleMethod::CpOls => insample::cp_ols(train, &gen.fit)?,
        InSampleMethod::CpLasso => insample::cp_lasso(train, &gen.fit)?,
        InSampleMethod::CovPenaltyBootstrap | InSampleMethod::CountingPenaltyLogistic => {
            loss.check(spec.algorithm.model_kind())?;
            insample::from_replicates(train, &gen.fit, &reps, loss, method)?
        }
    };
    let factor = correction_factor(&gen, &reps, config);
    let diffs: Vec<f64> = reps.iter().map(|r| r.test_loss - r.in_loss).collect();
    let difference_term = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let dir = finish(
        reps.iter().map(|r| r.test_loss).collect(),
        Estimator::ErrXdir,
        factor,
    );
    let dec = finish(
        diffs.iter().map(|d| insample.value + d).collect(),
        Estimator::ErrXdec,
        factor,
    );
    Ok(ErrxReport {
        dir,
        dec,
        insample,
        difference_term,
    })
}
