use proptest::prelude::*;
use shifterr_core::linalg::Matrix;
use shifterr_core::metrics::{mad_std, mse_std, signed_bias_std, true_test_error, ComparisonRow};
use shifterr_core::{Dataset, LossKind, ParametricModel};

#[test]
fn squared_test_error_by_hand() {
    let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]]).unwrap();
    let test = Dataset::new(x, Some(vec![2.0, 1.0, 0.0]), None).unwrap();
    let model = ParametricModel::gaussian(vec![1.0, 0.5], 1.0);
    // Predictions 1, 1, 1.5: squared errors 1, 0, 2.25.
    assert_eq!(
        true_test_error(&model, &test, LossKind::Squared).unwrap(),
        3.25 / 3.0
    );
}

fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0..20.0f64, n),
            prop::collection::vec(0.1..20.0f64, n),
        )
    })
}

proptest! {
    #[test]
    fn metrics_ignore_replicate_order((est, truth) in pairs(), shift in 0usize..40) {
        let k = shift % est.len();
        let rot = |v: &[f64]| [&v[k..], &v[..k]].concat();
        let a = ComparisonRow::new("x", &est, &truth).unwrap();
        let b = ComparisonRow::new("x", &rot(&est), &rot(&truth)).unwrap();
        for (u, v) in [(a.signed_bias, b.signed_bias), (a.mse_std, b.mse_std), (a.mad_std, b.mad_std)] {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn mad_dominates_absolute_bias((est, truth) in pairs()) {
        let bias = signed_bias_std(&est, &truth).unwrap();
        prop_assert!(mad_std(&est, &truth).unwrap() >= bias.abs() - 1e-12);
        prop_assert!(mse_std(&est, &truth).unwrap() >= 0.0);
    }
}
