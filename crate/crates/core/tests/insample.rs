mod common;

use common::*;
use proptest::prelude::*;
use shifterr_core::insample::{self, covariance_terms};
use shifterr_core::linalg::Matrix;
use shifterr_core::models::{fit_lasso_cv, fit_ols, predict};
use shifterr_core::{BootstrapConfig, FitAlgorithm, FitSpec, InSampleMethod, LossKind};

fn coarse_lasso() -> FitSpec {
    FitSpec {
        n_lambda: 50,
        lambda_min_ratio: 1e-2,
        tolerance: 1e-7,
        ..FitSpec::new(FitAlgorithm::LassoCv)
    }
}

#[test]
fn cp_ols_is_unbiased_for_in_sample_error() {
    let x = gaussian_matrix(11, 100, 10, 1.0);
    let theta = sparse_theta(10, 4, 2.0);
    let values: Vec<f64> = (0..1000)
        .map(|rep| {
            let d = labeled(&x, linear_outcomes(&x, &theta, 3.0, rep));
            insample::cp_ols(&d, &fit_ols(&d).unwrap()).unwrap().value
        })
        .collect();
    let target = 9.0 * (1.0 + 10.0 / 100.0);
    assert!(
        (mean(&values) - target).abs() < 0.02 * target,
        "mean {} vs {target}",
        mean(&values)
    );
}

#[test]
fn cp_lasso_tracks_fresh_outcome_in_sample_error() {
    let (n, p, sigma) = (100, 50, 3.0);
    let x = gaussian_matrix(12, n, p, 1.0);
    let theta = sparse_theta(p, 5, 2.0);
    let signal = x.mul_vec(&theta);
    let spec = coarse_lasso();
    let (mut est, mut truth) = (Vec::new(), Vec::new());
    for rep in 0..500 {
        let d = labeled(&x, linear_outcomes(&x, &theta, sigma, rep));
        let fit = fit_lasso_cv(&d, &spec).unwrap();
        est.push(insample::cp_lasso(&d, &fit).unwrap().value);
        // Expected loss on fresh outcomes at X, in closed form.
        let fitted = predict(&fit.model, &x).unwrap();
        let bias: f64 = signal
            .iter()
            .zip(&fitted)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n as f64;
        truth.push(sigma * sigma + bias);
    }
    let rel = (mean(&est) - mean(&truth)).abs() / mean(&truth);
    assert!(
        rel < 0.10,
        "cp_lasso {} vs Err_in {}",
        mean(&est),
        mean(&truth)
    );
}

#[test]
fn ols_covariance_penalty_matches_cp() {
    let x = gaussian_matrix(13, 100, 10, 1.0);
    let d = labeled(&x, linear_outcomes(&x, &sparse_theta(10, 4, 2.0), 3.0, 1));
    let spec = FitSpec::new(FitAlgorithm::Ols);
    let sigma2 = fit_ols(&d).unwrap().model.sigma2.unwrap();

    let e = insample::cov_penalty_bootstrap(&d, &spec, &BootstrapConfig::new(1000, 4)).unwrap();
    assert!(
        (e.penalty_term - 1.8).abs() < 0.15 * 1.8,
        "penalty {}",
        e.penalty_term
    );

    let e = insample::cov_penalty_bootstrap(&d, &spec, &BootstrapConfig::new(2000, 5)).unwrap();
    let cp = 2.0 * 10.0 * sigma2 / 100.0;
    assert!(
        (e.penalty_term - cp).abs() < 0.10 * cp,
        "penalty {} vs {cp}",
        e.penalty_term
    );
    assert_eq!(e.value, e.training_loss + e.penalty_term);
}

#[test]
fn predictor_that_ignores_outcomes_has_no_penalty() {
    let x = gaussian_matrix(14, 60, 4, 1.0);
    let d = labeled(&x, linear_outcomes(&x, &sparse_theta(4, 2, 1.0), 1.0, 2));
    let spec = FitSpec::new(FitAlgorithm::LassoCv).with_lambda(1e6);
    let e = insample::cov_penalty_bootstrap(&d, &spec, &BootstrapConfig::new(50, 1)).unwrap();
    assert_eq!(e.penalty_term, 0.0);
    assert_eq!(e.value, e.training_loss);
}

#[test]
fn noiseless_generator_gives_zero_penalty() {
    let x = gaussian_matrix(15, 30, 3, 1.0);
    // Zero outcomes give an exactly zero fit, so the generator has no noise.
    let d = labeled(&x, vec![0.0; 30]);
    let spec = FitSpec::new(FitAlgorithm::Ols);
    assert_eq!(fit_ols(&d).unwrap().model.sigma2, Some(0.0));
    let e = insample::cov_penalty_bootstrap(&d, &spec, &BootstrapConfig::new(2, 9)).unwrap();
    assert_eq!(e.penalty_term, 0.0);
}

#[test]
fn constant_classifier_has_no_counting_penalty() {
    let x = gaussian_matrix(16, 80, 3, 1.0);
    let d = labeled(&x, logistic_outcomes(&x, &[1.0, 0.0, 0.0], 3));
    let spec = FitSpec::new(FitAlgorithm::LogisticL1).with_lambda(1e6);
    let e = insample::counting_penalty_logistic(&d, &spec, &BootstrapConfig::new(40, 2)).unwrap();
    assert_eq!(e.penalty_term, 0.0);
}

#[test]
fn separated_data_has_zero_training_loss_and_nonnegative_penalty() {
    let x = Matrix::from_fn(40, 1, |i, _| {
        if i % 2 == 0 {
            -1.0 - i as f64 / 40.0
        } else {
            1.0 + i as f64 / 40.0
        }
    });
    let y: Vec<f64> = (0..40).map(|i| f64::from(i % 2 == 1)).collect();
    let d = labeled(&x, y);
    let spec = FitSpec {
        n_lambda: 20,
        cv_folds: 5,
        ..FitSpec::new(FitAlgorithm::LogisticL1)
    };
    let e = insample::counting_penalty_logistic(&d, &spec, &BootstrapConfig::new(100, 3)).unwrap();
    assert_eq!(e.training_loss, 0.0);
    assert_eq!(e.value, e.penalty_term);
    assert!(e.penalty_term >= 0.0);
}

#[test]
fn counting_penalty_tracks_fresh_label_in_sample_error() {
    let (n, p) = (200, 10);
    let theta = sparse_theta(p, 3, 1.0);
    let spec = FitSpec::new(FitAlgorithm::LogisticL1).with_lambda(0.02);
    let config = |rep| BootstrapConfig::new(100, rep);
    let x = gaussian_matrix(17, n, p, 1.0);
    let probs: Vec<f64> = x
        .mul_vec(&theta)
        .into_iter()
        .map(shifterr_core::models::sigmoid)
        .collect();
    let (mut est, mut truth) = (Vec::new(), Vec::new());
    for rep in 0..200 {
        let d = labeled(&x, logistic_outcomes(&x, &theta, rep));
        est.push(
            insample::counting_penalty_logistic(&d, &spec, &config(rep))
                .unwrap()
                .value,
        );
        // Probability that a fresh label disagrees with the thresholded prediction.
        let fit = shifterr_core::models::fit(&d, &spec).unwrap();
        let pred = predict(&fit.model, &x).unwrap();
        let err: f64 = probs
            .iter()
            .zip(&pred)
            .map(|(q, &h)| if h >= 0.5 { 1.0 - q } else { *q })
            .sum();
        truth.push(err / n as f64);
    }
    let rel = (mean(&est) - mean(&truth)).abs() / mean(&truth);
    assert!(
        rel < 0.15,
        "counting estimate {} vs Err_in {}",
        mean(&est),
        mean(&truth)
    );
}

#[test]
fn estimate_dispatches_to_cp() {
    let x = gaussian_matrix(18, 50, 3, 1.0);
    let d = labeled(&x, linear_outcomes(&x, &[1.0, 1.0, 0.0], 1.0, 4));
    let spec = FitSpec::new(FitAlgorithm::Ols);
    let via = insample::estimate(
        &d,
        &spec,
        LossKind::Squared,
        &BootstrapConfig::new(2, 0),
        InSampleMethod::CpOls,
    )
    .unwrap();
    assert_eq!(via, insample::cp_ols(&d, &fit_ols(&d).unwrap()).unwrap());
}

fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(Vec::as_slice).collect()
}

proptest! {
    #[test]
    fn half_shift_leaves_covariances_bit_identical(
        rows in prop::collection::vec(prop::collection::vec((0u8..2, 0u8..2), 12), 2..30),
    ) {
        let ys: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&(y, _)| f64::from(y)).collect()).collect();
        let preds: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&(_, h)| f64::from(h)).collect()).collect();
        let shifted: Vec<Vec<f64>> = preds.iter().map(|r| r.iter().map(|h| h + 0.5).collect()).collect();
        let a = covariance_terms(&refs(&ys), &refs(&preds));
        let b = covariance_terms(&refs(&ys), &refs(&shifted));
        prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
