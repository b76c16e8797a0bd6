//! Lasso by cyclic coordinate descent on the Gram matrix.
//!
//! Objective: `(1/(2n))‖y − Xθ‖² + λ‖θ‖₁`, features used as given.
//! The solver keeps the gradient `g = Xᵀ(y − Xθ)/n` up to date, so checking
//! a coordinate is O(1) and moving one is O(p), independent of n.

use super::{
    argmin_first, residual_ss, resolve_grid, sigma2_from_rss, CvFolds, FitFlag, FitResult, FitSpec,
    ParametricModel, SINGULAR_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};

#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

pub fn lasso_objective(x: &Matrix, y: &[f64], theta: &[f64], lambda: f64) -> f64 {
    let n = x.nrows() as f64;
    residual_ss(x, y, theta) / (2.0 * n) + lambda * theta.iter().map(|t| t.abs()).sum::<f64>()
}

/// Largest violation of the Lasso subgradient conditions at `theta`.
///
/// Zero coordinates need `|x_jᵀr/n| ≤ λ`; active ones need `x_jᵀr/n = λ·sign(θ_j)`.
pub fn kkt_violation(x: &Matrix, y: &[f64], theta: &[f64], lambda: f64) -> f64 {
    let n = x.nrows() as f64;
    let fitted = x.mul_vec(theta);
    let r: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    (0..x.ncols())
        .map(|j| {
            let g = dot(x.col(j), &r) / n;
            if theta[j] == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g - lambda * theta[j].signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Coordinate-descent state for one normalized Gram system.
#[derive(Debug, Clone)]
pub struct CoordinateDescent<'a> {
    gram: &'a Matrix,
    xty: Vec<f64>,
    theta: Vec<f64>,
    grad: Vec<f64>,
}

/// Unconverged support sweeps after which an exact support solve is tried.
const POLISH_AFTER: usize = 5;

impl<'a> CoordinateDescent<'a> {
    /// `gram = XᵀX/n`, `xty = Xᵀy/n`, starting from `theta`.
    pub fn new(gram: &'a Matrix, xty: &[f64], theta: Vec<f64>) -> Self {
        let gt = gram.mul_vec(&theta);
        let grad = xty.iter().zip(&gt).map(|(c, g)| c - g).collect();
        Self {
            gram,
            xty: xty.to_vec(),
            theta,
            grad,
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn into_theta(self) -> Vec<f64> {
        self.theta
    }

    #[inline]
    fn update(&mut self, j: usize, lambda: f64) -> f64 {
        let gjj = self.gram[(j, j)];
        if gjj <= 0.0 {
            return 0.0;
        }
        let old = self.theta[j];
        let new = soft_threshold(self.grad[j] + gjj * old, lambda) / gjj;
        let delta = new - old;
        if delta == 0.0 {
            return 0.0;
        }
        self.theta[j] = new;
        let col = self.gram.col(j);
        for (g, &c) in self.grad.iter_mut().zip(col) {
            *g -= c * delta;
        }
        delta.abs() * gjj.sqrt()
    }

    /// One pass over `coords`; returns the largest scaled coordinate move.
    pub fn sweep(&mut self, coords: impl IntoIterator<Item = usize>, lambda: f64) -> f64 {
        coords
            .into_iter()
            .fold(0.0, |m, j| m.max(self.update(j, lambda)))
    }

    /// Runs sweeps to convergence; full sweeps alternate with sweeps over the
    /// current support. Returns the number of sweeps used.
    pub fn solve(&mut self, lambda: f64, tol: f64, max_iter: usize) -> Result<usize> {
        let p = self.theta.len();
        let mut sweeps = 0;
        let mut active = Vec::with_capacity(p);
        loop {
            let m = self.sweep(0..p, lambda);
            sweeps += 1;
            if m < tol {
                return Ok(sweeps);
            }
            let mut stalled = 0;
            loop {
                active.clear();
                active.extend((0..p).filter(|&j| self.theta[j] != 0.0));
                let m = self.sweep(active.iter().copied(), lambda);
                sweeps += 1;
                if m < tol {
                    break;
                }
                stalled += 1;
                if stalled % POLISH_AFTER == 0 {
                    self.polish(&active, lambda);
                }
                if sweeps >= max_iter {
                    return Err(Error::NoConvergence { lambda, max_iter });
                }
            }
            if sweeps >= max_iter {
                return Err(Error::NoConvergence { lambda, max_iter });
            }
        }
    }
}

impl CoordinateDescent<'_> {
    /// Solves the stationarity equations on `support` with the current signs,
    /// `G_AA θ_A = c_A − λ·sign(θ_A)`, and keeps the result if the signs agree.
    fn polish(&mut self, support: &[usize], lambda: f64) -> bool {
        let k = support.len();
        if k == 0 {
            return false;
        }
        let sub = Matrix::from_fn(k, k, |a, b| self.gram[(support[a], support[b])]);
        let Ok(chol) = Cholesky::new(&sub, SINGULAR_TOL) else {
            return false;
        };
        let rhs: Vec<f64> = support
            .iter()
            .map(|&j| self.xty[j] - lambda * self.theta[j].signum())
            .collect();
        let sol = chol.solve(&rhs);
        if support
            .iter()
            .zip(&sol)
            .any(|(&j, v)| v.signum() != self.theta[j].signum() || *v == 0.0)
        {
            return false;
        }
        for (&j, v) in support.iter().zip(sol) {
            self.theta[j] = v;
        }
        let gt = self.gram.mul_vec(&self.theta);
        for ((g, c), t) in self.grad.iter_mut().zip(&self.xty).zip(gt) {
            *g = c - t;
        }
        true
    }
}

/// Share of `yᵀy` explained beyond which the rest of a path is not solved.
pub(crate) const SATURATION: f64 = 0.999;

/// Warm-started solutions along a decreasing grid; `yy = yᵀy/n`.
///
/// Once the fit explains more than [`SATURATION`] of `yᵀy`, later grid points
/// repeat the last solution instead of driving the solver to interpolation.
/// A solver failure ends the path; the solved prefix is returned with it.
pub(crate) fn path(
    gram: &Matrix,
    xty: &[f64],
    yy: f64,
    grid: &[f64],
    tol: f64,
    max_iter: usize,
) -> Path {
    let mut cd = CoordinateDescent::new(gram, xty, vec![0.0; gram.ncols()]);
    let mut thetas = Vec::with_capacity(grid.len());
    for &lambda in grid {
        if !thetas.is_empty() && saturated(&cd, xty, yy) {
            thetas.push(cd.theta().to_vec());
            continue;
        }
        if let Err(e) = cd.solve(lambda, tol, max_iter) {
            return Path {
                thetas,
                failure: Some(e),
            };
        }
        thetas.push(cd.theta().to_vec());
    }
    Path {
        thetas,
        failure: None,
    }
}

#[derive(Debug)]
pub(crate) struct Path {
    pub thetas: Vec<Vec<f64>>,
    pub failure: Option<Error>,
}

impl Path {
    /// Solution at the last grid point, or the failure that stopped the path.
    pub(crate) fn last(mut self, len: usize) -> Result<Vec<f64>> {
        match self.failure {
            Some(e) if self.thetas.len() < len => Err(e),
            _ => Ok(self.thetas.pop().expect("nonempty grid")),
        }
    }
}

fn saturated(cd: &CoordinateDescent<'_>, xty: &[f64], yy: f64) -> bool {
    // rss/n = yy - θᵀ(c + g) where g = c - Gθ is the maintained gradient.
    let theta = cd.theta();
    let fitted: f64 = theta
        .iter()
        .zip(xty.iter().zip(&cd.grad))
        .map(|(t, (c, g))| t * (c + g))
        .sum();
    yy > 0.0 && (yy - fitted) < (1.0 - SATURATION) * yy
}

/// `Σ y_i²` over rows not in `held`.
fn train_ss(y: &[f64], held: &[usize]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>() - held.iter().map(|&i| y[i] * y[i]).sum::<f64>()
}

#[derive(Debug)]
pub(crate) struct LassoCache {
    /// Unnormalized `XᵀX`.
    xtx: Matrix,
    folds: Option<CvFolds>,
    /// Normalized Gram matrix of each fold's training rows.
    fold_gram: Vec<Matrix>,
}

impl LassoCache {
    pub(crate) fn new(x: &Matrix, folds: Option<CvFolds>) -> Self {
        let xtx = x.gram();
        let fold_gram = folds
            .as_ref()
            .map(|f| {
                f.test_x
                    .iter()
                    .zip(&f.train_idx)
                    .map(|(xh, tr)| {
                        let held = xh.gram();
                        let n_tr = tr.len() as f64;
                        Matrix::from_fn(xtx.nrows(), xtx.ncols(), |a, b| {
                            (xtx[(a, b)] - held[(a, b)]) / n_tr
                        })
                    })
                    .collect()
            })
            .unwrap_or_default();
        Self {
            xtx,
            folds,
            fold_gram,
        }
    }

    pub(crate) fn fit_cv(&self, x: &Matrix, y: &[f64], spec: &FitSpec) -> Result<FitResult> {
        let n = x.nrows();
        let nf = n as f64;
        let xty = x.tr_mul_vec(y);
        let lambda_max = xty.iter().fold(0.0f64, |m, v| m.max(v.abs())) / nf;
        let grid = resolve_grid(spec, lambda_max)?;
        let gram = self.xtx.scale(1.0 / nf);
        let xty_n: Vec<f64> = xty.iter().map(|v| v / nf).collect();

        let best = match (&self.folds, grid.len()) {
            (Some(folds), len) if len > 1 => {
                let mut sse = vec![0.0; len];
                for (f, xh) in folds.test_x.iter().enumerate() {
                    let idx = &folds.test_idx[f];
                    let yh: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
                    let held = xh.tr_mul_vec(&yh);
                    let n_tr = folds.train_idx[f].len() as f64;
                    let c: Vec<f64> = xty.iter().zip(&held).map(|(a, b)| (a - b) / n_tr).collect();
                    let yy = train_ss(y, &folds.test_idx[f]) / n_tr;
                    // λ values a fold cannot solve are never selected.
                    let fold_path = path(
                        &self.fold_gram[f],
                        &c,
                        yy,
                        &grid,
                        spec.tolerance,
                        spec.max_iter,
                    );
                    for (k, s) in sse.iter_mut().enumerate() {
                        *s += match fold_path.thetas.get(k) {
                            Some(th) => {
                                let pred = xh.mul_vec(th);
                                yh.iter()
                                    .zip(&pred)
                                    .map(|(a, b)| (a - b) * (a - b))
                                    .sum::<f64>()
                            }
                            None => f64::INFINITY,
                        };
                    }
                }
                argmin_first(&sse)
            }
            _ => 0,
        };

        let yy = y.iter().map(|v| v * v).sum::<f64>() / nf;
        let theta = path(
            &gram,
            &xty_n,
            yy,
            &grid[..=best],
            spec.tolerance,
            spec.max_iter,
        )
        .last(best + 1)?;
        let rss = residual_ss(x, y, &theta);
        let active = theta.iter().filter(|v| **v != 0.0).count();
        let sigma2 = sigma2_from_rss(rss, n, active)?;
        Ok(FitResult::new(
            ParametricModel::gaussian(theta, sigma2),
            Some(grid[best]),
            rss,
        ))
    }

    /// Least-squares refit on the support of `fit`.
    pub(crate) fn relax(&self, x: &Matrix, y: &[f64], fit: FitResult) -> Result<FitResult> {
        let n = x.nrows();
        let support: Vec<usize> = (0..x.ncols())
            .filter(|&j| fit.model.theta[j] != 0.0)
            .collect();
        if support.is_empty() {
            let rss = y.iter().map(|v| v * v).sum::<f64>();
            let mut out = FitResult::new(
                ParametricModel::gaussian(vec![0.0; x.ncols()], rss / n as f64),
                fit.lambda_selected,
                rss,
            );
            out.flags.push(FitFlag::EmptyActiveSet);
            return Ok(out);
        }
        if support.len() >= n {
            return Err(Error::Saturated {
                active: support.len(),
                n,
            });
        }
        let k = support.len();
        let sub = Matrix::from_fn(k, k, |a, b| self.xtx[(support[a], support[b])]);
        let chol = Cholesky::new(&sub, SINGULAR_TOL)?;
        let rhs: Vec<f64> = support.iter().map(|&j| dot(x.col(j), y)).collect();
        let coef = chol.solve(&rhs);
        let mut theta = vec![0.0; x.ncols()];
        for (&j, c) in support.iter().zip(coef) {
            theta[j] = c;
        }
        let rss = residual_ss(x, y, &theta);
        let sigma2 = sigma2_from_rss(rss, n, k)?;
        let mut out = FitResult::new(
            ParametricModel::gaussian(theta, sigma2),
            fit.lambda_selected,
            rss,
        );
        // An exact zero from least squares still counts as selected.
        out.active_count = k;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::models::{fit_lasso_cv, fit_ols, fit_relaxed_lasso, FitAlgorithm, FitSpec};
    use crate::rng::SeedStream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_problem(seed: u64, n: usize, p: usize, k: usize, sigma: f64) -> Dataset {
        let mut rng = SeedStream::new(seed).rng();
        let x = Matrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
        let mut theta = vec![0.0; p];
        theta.iter_mut().take(k).for_each(|t| *t = 2.0);
        let mean = x.mul_vec(&theta);
        let y = mean
            .iter()
            .map(|m| m + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Dataset::new(x, Some(y), None).unwrap()
    }

    #[test]
    fn full_shrinkage_threshold_gives_zero() {
        let d = random_problem(1, 40, 5, 2, 1.0);
        let xty = d.x().tr_mul_vec(d.y().unwrap());
        let lmax = xty.iter().fold(0.0f64, |m, v| m.max(v.abs())) / 40.0;
        let f = fit_lasso_cv(&d, &FitSpec::new(FitAlgorithm::LassoCv).with_lambda(lmax)).unwrap();
        assert!(f.model.theta.iter().all(|t| *t == 0.0));
        assert_eq!(f.active_count, 0);
        let f = fit_lasso_cv(
            &d,
            &FitSpec::new(FitAlgorithm::LassoCv).with_lambda(2.0 * lmax),
        )
        .unwrap();
        assert!(f.model.theta.iter().all(|t| *t == 0.0));
    }

    #[test]
    fn zero_penalty_matches_least_squares() {
        let d = random_problem(2, 60, 8, 3, 1.0);
        let lasso =
            fit_lasso_cv(&d, &FitSpec::new(FitAlgorithm::LassoCv).with_lambda(0.0)).unwrap();
        let ols = fit_ols(&d).unwrap();
        for (a, b) in lasso.model.theta.iter().zip(&ols.model.theta) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn scalar_problem_matches_grid_search() {
        let x = Matrix::from_fn(4, 1, |_, _| 1.0);
        let y = vec![2.0; 4];
        let d = Dataset::new(x.clone(), Some(y.clone()), None).unwrap();
        let f = fit_lasso_cv(&d, &FitSpec::new(FitAlgorithm::LassoCv).with_lambda(1.0)).unwrap();
        // Oracle: brute-force grid over [-5, 5] with step 1e-4.
        let (mut best_t, mut best_v) = (0.0, f64::INFINITY);
        for k in 0..=100_000 {
            let t = -5.0 + k as f64 * 1e-4;
            let v = lasso_objective(&x, &y, &[t], 1.0);
            if v < best_v {
                best_v = v;
                best_t = t;
            }
        }
        assert!((best_t - 1.0_f64).abs() < 1e-4);
        assert!((f.model.theta[0] - best_t).abs() < 1e-4);
        assert!((f.model.theta[0] - soft_threshold(2.0, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn objective_is_monotone_across_sweeps() {
        let d = random_problem(3, 50, 20, 4, 2.0);
        let n = d.n() as f64;
        let gram = d.x().gram().scale(1.0 / n);
        let xty: Vec<f64> = d
            .x()
            .tr_mul_vec(d.y().unwrap())
            .iter()
            .map(|v| v / n)
            .collect();
        let lambda = 0.1;
        let mut cd = CoordinateDescent::new(&gram, &xty, vec![0.0; 20]);
        let mut prev = lasso_objective(d.x(), d.y().unwrap(), cd.theta(), lambda);
        for _ in 0..50 {
            cd.sweep(0..20, lambda);
            let obj = lasso_objective(d.x(), d.y().unwrap(), cd.theta(), lambda);
            assert!(obj <= prev + 1e-12, "objective rose from {prev} to {obj}");
            prev = obj;
        }
    }

    #[test]
    fn cv_fit_satisfies_kkt() {
        let d = random_problem(4, 100, 50, 5, 3.0);
        let f = fit_lasso_cv(&d, &FitSpec::new(FitAlgorithm::LassoCv)).unwrap();
        let lambda = f.lambda_selected.unwrap();
        assert!(kkt_violation(d.x(), d.y().unwrap(), &f.model.theta, lambda) < 1e-6);
        assert!(f.active_count > 0 && f.active_count < 50);
    }

    #[test]
    fn relaxed_refit_on_support_equals_ols_on_support() {
        let d = random_problem(5, 100, 20, 3, 2.0);
        let spec = FitSpec::new(FitAlgorithm::LassoCv);
        let lasso = fit_lasso_cv(&d, &spec).unwrap();
        let relaxed = fit_relaxed_lasso(&d, &spec).unwrap();
        let support: Vec<usize> = (0..20).filter(|&j| lasso.model.theta[j] != 0.0).collect();
        let sub = Dataset::new(
            d.x().select_cols(&support),
            d.y().map(<[f64]>::to_vec),
            None,
        )
        .unwrap();
        let ols = fit_ols(&sub).unwrap();
        for (k, &j) in support.iter().enumerate() {
            assert!((relaxed.model.theta[j] - ols.model.theta[k]).abs() < 1e-10);
        }
        for j in (0..20).filter(|j| !support.contains(j)) {
            assert_eq!(relaxed.model.theta[j], 0.0);
        }
        // Relaxation undoes shrinkage on the selected coefficients.
        let l1 = |t: &[f64]| t.iter().map(|v| v.abs()).sum::<f64>();
        assert!(l1(&relaxed.model.theta) > l1(&lasso.model.theta));
    }

    #[test]
    fn relaxed_with_full_support_is_ols() {
        let d = random_problem(6, 80, 4, 4, 0.5);
        let spec = FitSpec::new(FitAlgorithm::LassoCv).with_lambda(1e-3);
        let relaxed = fit_relaxed_lasso(&d, &spec).unwrap();
        let ols = fit_ols(&d).unwrap();
        for (a, b) in relaxed.model.theta.iter().zip(&ols.model.theta) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((relaxed.model.sigma2.unwrap() - ols.model.sigma2.unwrap()).abs() < 1e-10);
    }

    #[test]
    fn relaxed_with_empty_support_flags() {
        let d = random_problem(7, 30, 3, 1, 1.0);
        let spec = FitSpec::new(FitAlgorithm::LassoCv).with_lambda(1e6);
        let relaxed = fit_relaxed_lasso(&d, &spec).unwrap();
        assert!(relaxed.model.theta.iter().all(|t| *t == 0.0));
        assert!(relaxed.has_flag(FitFlag::EmptyActiveSet));
    }

    #[test]
    fn zero_response_is_a_degenerate_grid() {
        let x = Matrix::from_fn(20, 2, |i, j| (i + j) as f64);
        let d = Dataset::new(x, Some(vec![0.0; 20]), None).unwrap();
        assert_eq!(
            fit_lasso_cv(&d, &FitSpec::new(FitAlgorithm::LassoCv)).unwrap_err(),
            Error::DegenerateGrid
        );
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let d = random_problem(8, 50, 10, 3, 1.0);
        let mut spec = FitSpec::new(FitAlgorithm::LassoCv).with_lambda(0.0);
        spec.max_iter = 1;
        assert!(matches!(
            fit_lasso_cv(&d, &spec),
            Err(Error::NoConvergence { .. })
        ));
    }
}
