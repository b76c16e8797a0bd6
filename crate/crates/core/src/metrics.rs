//! Standardized comparisons of error estimates against realized test error.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::loss::{point_predictions, LossKind};
use crate::models::ParametricModel;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub estimator: String,
    pub signed_bias: f64,
    pub mse_std: f64,
    pub mad_std: f64,
    pub n_reps: usize,
}

impl ComparisonRow {
    pub fn new(estimator: impl Into<String>, estimates: &[f64], truths: &[f64]) -> Result<Self> {
        Ok(Self {
            estimator: estimator.into(),
            signed_bias: signed_bias_std(estimates, truths)?,
            mse_std: mse_std(estimates, truths)?,
            mad_std: mad_std(estimates, truths)?,
            n_reps: estimates.len(),
        })
    }
}

fn mean(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    v.sum::<f64>() / n as f64
}

fn check(estimates: &[f64], truths: &[f64]) -> Result<()> {
    if estimates.len() != truths.len() || estimates.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} estimates against {} truths",
            estimates.len(),
            truths.len()
        )));
    }
    Ok(())
}

fn mean_truth(truths: &[f64]) -> Result<f64> {
    let m = mean(truths.iter().copied(), truths.len());
    if m > 0.0 {
        Ok(m)
    } else {
        Err(Error::ZeroTruth)
    }
}

/// `mean(ê − e) / mean(e)`.
pub fn signed_bias_std(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    check(estimates, truths)?;
    let n = truths.len();
    Ok(mean(estimates.iter().zip(truths).map(|(a, b)| a - b), n) / mean_truth(truths)?)
}

/// `mean((ê − e)²) / mean(e²)`.
pub fn mse_std(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    check(estimates, truths)?;
    let n = truths.len();
    let denom = mean(truths.iter().map(|e| e * e), n);
    if !(denom > 0.0) {
        return Err(Error::ZeroTruth);
    }
    Ok(mean(
        estimates.iter().zip(truths).map(|(a, b)| (a - b) * (a - b)),
        n,
    ) / denom)
}

/// `mean(|ê − e|) / mean(e)`.
pub fn mad_std(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    check(estimates, truths)?;
    let n = truths.len();
    Ok(mean(estimates.iter().zip(truths).map(|(a, b)| (a - b).abs()), n) / mean_truth(truths)?)
}

/// Realized mean loss of the fitted model on a labeled test set.
pub fn true_test_error(model: &ParametricModel, test: &Dataset, loss: LossKind) -> Result<f64> {
    loss.check(model.kind)?;
    let y = test.require_y()?;
    Ok(loss.mean(y, &point_predictions(model, test.x(), loss)?))
}
