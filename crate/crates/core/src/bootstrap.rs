//! Parametric-bootstrap replicate engine shared by the in-sample and ErrX
//! estimators.
//!
//! Replicate `b` draws from its own substream in a fixed order: training
//! outcomes at `X`, then test outcomes at `X_test`, then a fresh outcome
//! vector at `X`. Estimators that need fewer draws stop early, so the
//! outcomes they share agree across estimators for the same seed.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::errx::{BootstrapConfig, Correction};
use crate::linalg::{norm_sq, Matrix};
use crate::loss::{point_predictions, LossKind};
use crate::models::{sample_outcomes, FitResult, FitSpec, Fitter, ParametricModel};
use crate::par::map_range;
use crate::rng::{tag, SeedStream};

/// Largest tolerated share of failed replicate refits.
pub const MAX_FAILED_SHARE: f64 = 0.1;

/// Initial fit and the model used to generate bootstrap outcomes.
#[derive(Debug)]
pub(crate) struct Generator<'a> {
    pub fitter: Fitter<'a>,
    pub fit: FitResult,
    pub model: ParametricModel,
}

impl<'a> Generator<'a> {
    pub fn new(train: &'a Dataset, spec: &'a FitSpec, correction: Correction) -> Result<Self> {
        let y = train.require_y()?;
        let fitter = Fitter::new(train.x(), spec)?;
        let fit = fitter.fit(y)?;
        let model = match correction {
            Correction::RelaxedLasso => {
                let relaxed = fitter.fit_relaxed(y)?;
                // Noise level stays at the initial estimate.
                ParametricModel {
                    sigma2: fit.model.sigma2,
                    ..relaxed.model
                }
            }
            Correction::None | Correction::Multiplicative => fit.model.clone(),
        };
        model.validate()?;
        Ok(Self { fitter, fit, model })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Needs<'a> {
    pub x_test: Option<&'a Matrix>,
    pub fresh_in: bool,
    pub keep_train: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Replicate {
    /// Bootstrap training outcomes and refit predictions at `X` (when kept).
    pub y: Vec<f64>,
    pub train_pred: Vec<f64>,
    pub test_loss: f64,
    pub in_loss: f64,
    pub theta_norm_sq: f64,
}

pub(crate) fn run(
    gen: &Generator<'_>,
    loss: LossKind,
    needs: Needs<'_>,
    config: &BootstrapConfig,
) -> Result<Vec<Replicate>> {
    let x = gen.fitter.x();
    let root = SeedStream::new(config.seed).child(tag::REPLICATE);
    let one = |b: usize| -> Result<Replicate> {
        let mut rng = root.child(b as u64).rng();
        let y = sample_outcomes(&gen.model, x, &mut rng)?;
        let y_test = needs
            .x_test
            .map(|xt| sample_outcomes(&gen.model, xt, &mut rng))
            .transpose()?;
        let y_fresh = if needs.fresh_in {
            Some(sample_outcomes(&gen.model, x, &mut rng)?)
        } else {
            None
        };
        let refit = gen.fitter.fit(&y)?;
        let test_loss = match (needs.x_test, &y_test) {
            (Some(xt), Some(yt)) => loss.mean(yt, &point_predictions(&refit.model, xt, loss)?),
            _ => f64::NAN,
        };
        let needs_train_pred = needs.keep_train || y_fresh.is_some();
        let train_pred = if needs_train_pred {
            point_predictions(&refit.model, x, loss)?
        } else {
            Vec::new()
        };
        let in_loss = y_fresh
            .as_ref()
            .map_or(f64::NAN, |yf| loss.mean(yf, &train_pred));
        Ok(Replicate {
            theta_norm_sq: norm_sq(&refit.model.theta),
            y: if needs.keep_train { y } else { Vec::new() },
            train_pred: if needs.keep_train {
                train_pred
            } else {
                Vec::new()
            },
            test_loss,
            in_loss,
        })
    };
    let results = map_range(config.replicates, config.execution, one);
    let total = results.len();
    let mut ok = Vec::with_capacity(total);
    let mut failed = 0;
    let mut last = None;
    for r in results {
        match r {
            Ok(rep) => ok.push(rep),
            Err(e) => {
                failed += 1;
                last = Some(e);
            }
        }
    }
    if failed as f64 > MAX_FAILED_SHARE * total as f64 || ok.is_empty() {
        let last = Box::new(last.unwrap_or(Error::InvalidInput("no replicates".into())));
        return Err(Error::FailedReplicates {
            failed,
            total,
            last,
        });
    }
    Ok(ok)
}

/// Per-observation covariance across replicates between outcomes and
/// predictions, with the 1/B normalization.
///
/// Deviations are taken from the first replicate before averaging, so adding
/// a constant to every outcome or every prediction leaves the result
/// bit-for-bit unchanged whenever the shifted values are exact.
pub fn covariance_terms(ys: &[&[f64]], preds: &[&[f64]]) -> Vec<f64> {
    assert_eq!(ys.len(), preds.len());
    let b = ys.len();
    if b == 0 {
        return Vec::new();
    }
    let n = ys[0].len();
    let bf = b as f64;
    (0..n)
        .map(|i| {
            let (ky, kf) = (ys[0][i], preds[0][i]);
            let (mut sy, mut sf, mut syf) = (0.0, 0.0, 0.0);
            for (y, f) in ys.iter().zip(preds) {
                let dy = y[i] - ky;
                let df = f[i] - kf;
                sy += dy;
                sf += df;
                syf += dy * df;
            }
            (syf - sy * sf / bf) / bf
        })
        .collect()
}
