use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::{predict, ModelKind, ParametricModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `(y - ŷ)²` on the linear predictor.
    Squared,
    /// 0-1 misclassification of the thresholded class prediction.
    Counting,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::Counting => "counting",
        }
    }

    pub fn check(self, kind: ModelKind) -> Result<()> {
        match (self, kind) {
            (LossKind::Squared, ModelKind::GaussianLinear)
            | (LossKind::Counting, ModelKind::BernoulliLogistic) => Ok(()),
            _ => Err(Error::IncompatibleLoss {
                loss: self.name(),
                model: kind.name(),
            }),
        }
    }

    #[inline]
    pub fn eval(self, y: f64, pred: f64) -> f64 {
        match self {
            LossKind::Squared => (y - pred) * (y - pred),
            LossKind::Counting => {
                if y == pred {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn mean(self, y: &[f64], pred: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), pred.len());
        y.iter()
            .zip(pred)
            .map(|(&a, &b)| self.eval(a, b))
            .sum::<f64>()
            / y.len() as f64
    }
}

/// Class label for a success probability; exactly 0.5 maps to class 1.
#[inline]
pub fn classify(prob: f64) -> f64 {
    if prob >= 0.5 {
        1.0
    } else {
        0.0
    }
}

/// Predictions on the scale the loss compares against: the mean for squared
/// error, the thresholded class for counting error.
pub fn point_predictions(model: &ParametricModel, x: &Matrix, loss: LossKind) -> Result<Vec<f64>> {
    let mut pred = predict(model, x)?;
    if loss == LossKind::Counting {
        pred.iter_mut().for_each(|p| *p = classify(*p));
    }
    Ok(pred)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_ties_go_to_class_one() {
        assert_eq!(classify(0.5), 1.0);
        assert_eq!(classify(0.4999999), 0.0);
    }

    #[test]
    fn compatibility() {
        assert!(LossKind::Squared.check(ModelKind::GaussianLinear).is_ok());
        assert!(LossKind::Counting.check(ModelKind::GaussianLinear).is_err());
        assert!(LossKind::Squared
            .check(ModelKind::BernoulliLogistic)
            .is_err());
    }
}
