use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use shifterr_core::linalg::Matrix;
use shifterr_core::models::{
    estimate_sigma2_lasso, fit_lasso_cv, fit_logistic, fit_ols, fit_relaxed_lasso, kkt_violation,
    lasso::CoordinateDescent, lasso_objective, predict, sample_outcomes, sigmoid,
};
use shifterr_core::rng::SeedStream;
use shifterr_core::{Dataset, FitAlgorithm, FitSpec, ParametricModel};

fn gaussian_matrix(seed: u64, n: usize, p: usize) -> Matrix {
    let mut rng = SeedStream::new(seed).rng();
    Matrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

fn linear_data(
    seed: u64,
    n: usize,
    p: usize,
    k: usize,
    strength: f64,
    sigma: f64,
) -> (Dataset, Vec<f64>) {
    let x = gaussian_matrix(seed, n, p);
    let theta: Vec<f64> = (0..p).map(|j| if j < k { strength } else { 0.0 }).collect();
    let mut rng = SeedStream::new(seed).child(1).rng();
    let y = x
        .mul_vec(&theta)
        .into_iter()
        .map(|m| m + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    (Dataset::new(x, Some(y), None).unwrap(), theta)
}

/// Solves `XᵀX θ = Xᵀy` by Gaussian elimination with partial pivoting on
/// explicitly accumulated normal equations.
fn normal_equations_oracle(x: &Matrix, y: &[f64]) -> Vec<f64> {
    let (n, p) = (x.nrows(), x.ncols());
    let mut a = vec![vec![0.0; p + 1]; p];
    for r in 0..p {
        for c in 0..p {
            a[r][c] = (0..n).map(|i| x[(i, r)] * x[(i, c)]).sum();
        }
        a[r][p] = (0..n).map(|i| x[(i, r)] * y[i]).sum();
    }
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for r in col + 1..p {
            let f = a[r][col] / a[col][col];
            for c in col..=p {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut theta = vec![0.0; p];
    for r in (0..p).rev() {
        let s: f64 = (r + 1..p).map(|c| a[r][c] * theta[c]).sum();
        theta[r] = (a[r][p] - s) / a[r][r];
    }
    theta
}

#[test]
fn ols_matches_normal_equations_oracle() {
    for seed in 0..20 {
        let (d, _) = linear_data(seed, 20, 3, 2, 1.5, 1.0);
        let fit = fit_ols(&d).unwrap();
        let oracle = normal_equations_oracle(d.x(), d.y().unwrap());
        for (a, b) in fit.model.theta.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn lasso_kkt_on_random_instances() {
    for seed in 0..50 {
        let n = 40 + (seed as usize % 5) * 20;
        let p = 5 + (seed as usize * 7) % 60;
        let (d, _) = linear_data(seed + 100, n, p, 3.min(p), 1.0, 2.0);
        let fit = fit_lasso_cv(&d, &FitSpec::new(FitAlgorithm::LassoCv)).unwrap();
        let v = kkt_violation(
            d.x(),
            d.y().unwrap(),
            &fit.model.theta,
            fit.lambda_selected.unwrap(),
        );
        assert!(
            v < 1e-6,
            "seed {seed} (n = {n}, p = {p}): KKT violation {v}"
        );
    }
}

#[test]
fn lasso_noise_estimate_is_near_truth_on_average() {
    let reps = 200;
    let x = gaussian_matrix(7, 100, 50);
    let theta: Vec<f64> = (0..50).map(|j| if j < 5 { 2.0 } else { 0.0 }).collect();
    let spec = FitSpec::new(FitAlgorithm::LassoCv);
    let mut total = 0.0;
    for r in 0..reps {
        let model = ParametricModel::gaussian(theta.clone(), 9.0);
        let y = sample_outcomes(&model, &x, &mut SeedStream::new(r).rng()).unwrap();
        let d = Dataset::new(x.clone(), Some(y), None).unwrap();
        let fit = fit_lasso_cv(&d, &spec).unwrap();
        let s2 = estimate_sigma2_lasso(&d, &fit).unwrap();
        assert_eq!(Some(s2), fit.model.sigma2);
        total += s2;
    }
    let mean = total / reps as f64;
    assert!((6.0..=12.0).contains(&mean), "mean noise estimate {mean}");
    assert!((mean - 9.0).abs() < 1.0, "mean noise estimate {mean}");
}

#[test]
fn relaxed_lasso_undoes_shrinkage_on_selected_coordinate() {
    // One strong coordinate among weak noise features.
    let (d, _) = linear_data(11, 60, 8, 1, 2.5, 1.0);
    let spec = FitSpec::new(FitAlgorithm::LassoCv).with_lambda(0.8);
    let lasso = fit_lasso_cv(&d, &spec).unwrap();
    assert_eq!(lasso.active_count, 1, "{:?}", lasso.model.theta);
    let relaxed = fit_relaxed_lasso(&d, &spec).unwrap();
    let sub = Dataset::new(d.x().select_cols(&[0]), d.y().map(<[f64]>::to_vec), None).unwrap();
    let ols = fit_ols(&sub).unwrap();
    assert_eq!(relaxed.model.theta[0], ols.model.theta[0]);
    assert!(relaxed.model.theta[1..].iter().all(|t| *t == 0.0));
    assert!(relaxed.model.theta[0] > lasso.model.theta[0]);
}

#[test]
fn logistic_probabilities_match_binned_frequencies() {
    let n = 100_000;
    let x = gaussian_matrix(3, n, 2);
    let model = ParametricModel::logistic(vec![1.5, -1.0]);
    let y = sample_outcomes(&model, &x, &mut SeedStream::new(4).rng()).unwrap();
    let eta = x.mul_vec(&model.theta);
    let edges: Vec<f64> = (0..=12).map(|k| -3.0 + 0.5 * k as f64).collect();
    for w in edges.windows(2) {
        let idx: Vec<usize> = (0..n)
            .filter(|&i| eta[i] >= w[0] && eta[i] < w[1])
            .collect();
        if idx.len() < 2000 {
            continue;
        }
        let freq = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        let expected = idx.iter().map(|&i| sigmoid(eta[i])).sum::<f64>() / idx.len() as f64;
        assert!(
            (freq - expected).abs() < 0.02,
            "bin {w:?}: {freq} vs {expected}"
        );
    }
}

#[test]
fn logistic_recovers_signal_on_large_sample() {
    let x = gaussian_matrix(21, 5000, 3);
    let model = ParametricModel::logistic(vec![1.0, -0.5, 0.0]);
    let y = sample_outcomes(&model, &x, &mut SeedStream::new(22).rng()).unwrap();
    let d = Dataset::new(x, Some(y), None).unwrap();
    let fit = fit_logistic(&d, &FitSpec::new(FitAlgorithm::LogisticL1).with_lambda(0.0)).unwrap();
    for (a, b) in fit.model.theta.iter().zip(&model.theta) {
        assert!((a - b).abs() < 0.1, "{:?}", fit.model.theta);
    }
    let p = predict(&fit.model, d.x()).unwrap();
    assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ols_residuals_are_orthogonal(seed in 0u64..10_000, n in 5usize..60, p in 1usize..5) {
        prop_assume!(n > p);
        let (d, _) = linear_data(seed, n, p, p, 1.0, 1.0);
        let fit = fit_ols(&d).unwrap();
        let y = d.y().unwrap();
        let r: Vec<f64> = y.iter().zip(d.x().mul_vec(&fit.model.theta)).map(|(a, b)| a - b).collect();
        let xr = d.x().tr_mul_vec(&r).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let xy = d.x().tr_mul_vec(y).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(xr < 1e-8 * xy.max(1.0));
    }

    #[test]
    fn coordinate_descent_never_increases_objective(seed in 0u64..10_000, p in 2usize..30, frac in 0.01f64..0.9) {
        let (d, _) = linear_data(seed, 40, p, 2, 1.0, 1.0);
        let n = d.n() as f64;
        let gram = d.x().gram().scale(1.0 / n);
        let xty: Vec<f64> = d.x().tr_mul_vec(d.y().unwrap()).iter().map(|v| v / n).collect();
        let lambda = frac * xty.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut cd = CoordinateDescent::new(&gram, &xty, vec![0.0; p]);
        let mut prev = lasso_objective(d.x(), d.y().unwrap(), cd.theta(), lambda);
        for _ in 0..20 {
            cd.sweep(0..p, lambda);
            let obj = lasso_objective(d.x(), d.y().unwrap(), cd.theta(), lambda);
            prop_assert!(obj <= prev + 1e-12 * prev.abs().max(1.0));
            prev = obj;
        }
        cd.solve(lambda, 1e-10, 100_000).unwrap();
        prop_assert!(kkt_violation(d.x(), d.y().unwrap(), cd.theta(), lambda) < 1e-6);
    }

    #[test]
    fn sampling_is_pure(seed in any::<u64>(), sigma2 in 0.0f64..10.0) {
        let x = gaussian_matrix(1, 8, 2);
        let model = ParametricModel::gaussian(vec![0.3, -1.0], sigma2);
        let s = SeedStream::new(seed);
        let a = sample_outcomes(&model, &x, &mut s.rng()).unwrap();
        let b = sample_outcomes(&model, &x, &mut s.rng()).unwrap();
        prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn relaxed_fit_is_least_squares_on_the_lasso_support(seed in 0u64..10_000, frac in 0.05f64..0.5) {
        let (d, _) = linear_data(seed, 50, 6, 3, 1.0, 1.0);
        let xty = d.x().tr_mul_vec(d.y().unwrap());
        let lambda = frac * xty.iter().fold(0.0f64, |m, v| m.max(v.abs())) / 50.0;
        let spec = FitSpec::new(FitAlgorithm::LassoCv).with_lambda(lambda);
        let lasso = fit_lasso_cv(&d, &spec).unwrap();
        let relaxed = fit_relaxed_lasso(&d, &spec).unwrap();
        let support: Vec<usize> = (0..6).filter(|&j| lasso.model.theta[j] != 0.0).collect();
        prop_assume!(!support.is_empty());
        let sub = Dataset::new(d.x().select_cols(&support), d.y().map(<[f64]>::to_vec), None).unwrap();
        let ols = fit_ols(&sub).unwrap();
        for (k, &j) in support.iter().enumerate() {
            prop_assert!((relaxed.model.theta[j] - ols.model.theta[k]).abs() < 1e-9);
        }
        for j in (0..6).filter(|j| !support.contains(j)) {
            prop_assert_eq!(relaxed.model.theta[j], 0.0);
        }
    }
}
