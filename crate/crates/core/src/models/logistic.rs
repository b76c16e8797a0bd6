//! Logistic regression without intercept.
//!
//! λ = 0 uses Newton's method with step halving. λ > 0 uses proximal Newton:
//! each outer step minimizes the weighted quadratic model plus the L1 term by
//! coordinate descent, then an Armijo backtracking search on the true objective.

use super::{
    argmin_first, resolve_grid, sigmoid, CvFolds, FitFlag, FitResult, FitSpec, ParametricModel,
    SINGULAR_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};

/// Coefficient magnitude beyond which an unpenalized fit is declared divergent.
pub const SEPARATION_BOUND: f64 = 30.0;

const MIN_WEIGHT: f64 = 1e-5;
const ARMIJO: f64 = 1e-4;
const MAX_OUTER: usize = 200;
/// Unconverged support sweeps after which an exact support solve is tried.
const POLISH_AFTER: usize = 5;

#[inline]
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Mean negative log-likelihood at linear predictor `eta`.
fn mean_nll(eta: &[f64], y: &[f64]) -> f64 {
    eta.iter()
        .zip(y)
        .map(|(&e, &yi)| softplus(e) - yi * e)
        .sum::<f64>()
        / y.len() as f64
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|t| t.abs()).sum()
}

/// Binomial deviance of probabilities `prob` against labels `y`.
pub(crate) fn deviance(y: &[f64], prob: &[f64]) -> f64 {
    const EPS: f64 = 1e-15;
    -2.0 * y
        .iter()
        .zip(prob)
        .map(|(&yi, &p)| {
            let p = p.clamp(EPS, 1.0 - EPS);
            yi * p.ln() + (1.0 - yi) * (1.0 - p).ln()
        })
        .sum::<f64>()
}

fn check_labels(y: &[f64]) -> Result<()> {
    if let Some(v) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidInput(format!(
            "logistic outcome {v} is not 0 or 1"
        )));
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Unpenalized maximum likelihood from a warm start.
pub(crate) fn newton(
    x: &Matrix,
    y: &[f64],
    theta: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<()> {
    let mut eta = x.mul_vec(theta);
    let mut f = mean_nll(&eta, y);
    for _ in 0..max_iter {
        let prob: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let w: Vec<f64> = prob.iter().map(|p| p * (1.0 - p)).collect();
        let resid: Vec<f64> = y.iter().zip(&prob).map(|(a, b)| a - b).collect();
        let grad = x.tr_mul_vec(&resid);
        let hess = x.weighted_gram(&w);
        let step = Cholesky::new(&hess, SINGULAR_TOL)?.solve(&grad);
        let x_step = x.mul_vec(&step);

        let mut t = 1.0;
        let (cand_eta, cand_f) = loop {
            let cand: Vec<f64> = eta.iter().zip(&x_step).map(|(e, d)| e + t * d).collect();
            let cf = mean_nll(&cand, y);
            if cf <= f {
                break (cand, cf);
            }
            t *= 0.5;
            if t < 1e-12 {
                // No representable decrease: at the optimum to machine precision.
                return Ok(());
            }
        };
        let mut largest = 0.0f64;
        for (th, d) in theta.iter_mut().zip(&step) {
            *th += t * d;
            largest = largest.max((t * d).abs());
        }
        eta = cand_eta;
        f = cand_f;
        if theta.iter().any(|v| v.abs() > SEPARATION_BOUND) {
            return Err(Error::SeparableData {
                bound: SEPARATION_BOUND,
            });
        }
        let scale = 1.0 + theta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if largest <= tol * scale {
            return Ok(());
        }
    }
    Err(Error::NoConvergence {
        lambda: 0.0,
        max_iter,
    })
}

/// L1-penalized fit at `lambda > 0` from a warm start.
pub(crate) fn prox_newton(
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    theta: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<()> {
    let n = x.nrows();
    let nf = n as f64;
    let p = x.ncols();
    let mut eta = x.mul_vec(theta);
    let mut f = mean_nll(&eta, y) + lambda * l1(theta);
    let mut sweeps = 0usize;
    let mut active = Vec::with_capacity(p);
    let mut r = vec![0.0; n];
    let mut wx = vec![0.0; n];

    for _ in 0..MAX_OUTER {
        let prob: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let w: Vec<f64> = prob
            .iter()
            .map(|q| (q * (1.0 - q)).max(MIN_WEIGHT))
            .collect();
        for i in 0..n {
            r[i] = (y[i] - prob[i]) / w[i];
        }
        let v: Vec<f64> = (0..p)
            .map(|j| {
                x.col(j)
                    .iter()
                    .zip(&w)
                    .map(|(a, wi)| wi * a * a)
                    .sum::<f64>()
                    / nf
            })
            .collect();

        let mut quad = WeightedQuadratic {
            x,
            w: &w,
            v: &v,
            r: &mut r,
            beta: theta.to_vec(),
            wx: &mut wx,
            lambda,
        };
        'inner: loop {
            let m = (0..p).fold(0.0f64, |m, j| m.max(quad.update(j)));
            sweeps += 1;
            if m < tol {
                break;
            }
            let mut stalled = 0;
            loop {
                active.clear();
                active.extend((0..p).filter(|&j| quad.beta[j] != 0.0));
                let m = active.iter().fold(0.0f64, |m, &j| m.max(quad.update(j)));
                sweeps += 1;
                if sweeps >= max_iter {
                    return Err(Error::NoConvergence { lambda, max_iter });
                }
                if m < tol {
                    continue 'inner;
                }
                stalled += 1;
                if stalled % POLISH_AFTER == 0 {
                    quad.polish(&active);
                }
            }
        }
        let beta = quad.beta;

        let d: Vec<f64> = beta.iter().zip(theta.iter()).map(|(b, t)| b - t).collect();
        if d.iter().all(|v| *v == 0.0) {
            return Ok(());
        }
        let resid: Vec<f64> = y.iter().zip(&prob).map(|(a, b)| a - b).collect();
        let grad_dot = -dot(&x.tr_mul_vec(&resid), &d) / nf;
        let decrease = grad_dot + lambda * (l1(&beta) - l1(theta));
        let xd = x.mul_vec(&d);

        let mut t = 1.0;
        let accepted = loop {
            let cand_eta: Vec<f64> = eta.iter().zip(&xd).map(|(e, s)| e + t * s).collect();
            let cand_theta: Vec<f64> = theta.iter().zip(&d).map(|(a, s)| a + t * s).collect();
            let cf = mean_nll(&cand_eta, y) + lambda * l1(&cand_theta);
            if cf <= f + ARMIJO * t * decrease {
                break Some((cand_eta, cand_theta, cf));
            }
            t *= 0.5;
            if t < 1e-12 {
                break None;
            }
        };
        let Some((cand_eta, cand_theta, cf)) = accepted else {
            // The quadratic model no longer predicts a representable decrease.
            return Ok(());
        };
        let largest = d
            .iter()
            .zip(&v)
            .fold(0.0f64, |m, (s, vj)| m.max((t * s).abs() * vj.sqrt()));
        theta.copy_from_slice(&cand_theta);
        eta = cand_eta;
        f = cf;
        if largest < tol {
            return Ok(());
        }
    }
    Err(Error::NoConvergence {
        lambda,
        max_iter: MAX_OUTER,
    })
}

/// Weighted least-squares model `(1/2n)Σ w_i (z_i − x_iᵀβ)² + λ‖β‖₁` of one
/// proximal Newton step, with `r = z − Xβ` kept current.
struct WeightedQuadratic<'a> {
    x: &'a Matrix,
    w: &'a [f64],
    /// `Σ_i w_i x_ij² / n`.
    v: &'a [f64],
    r: &'a mut [f64],
    beta: Vec<f64>,
    wx: &'a mut [f64],
    lambda: f64,
}

impl WeightedQuadratic<'_> {
    fn update(&mut self, j: usize) -> f64 {
        let vj = self.v[j];
        if vj <= 0.0 {
            return 0.0;
        }
        let nf = self.r.len() as f64;
        let col = self.x.col(j);
        for ((s, &a), &wi) in self.wx.iter_mut().zip(col).zip(self.w) {
            *s = a * wi;
        }
        let g = dot(self.wx, self.r) / nf;
        let new = super::soft_threshold(g + vj * self.beta[j], self.lambda) / vj;
        let delta = new - self.beta[j];
        if delta == 0.0 {
            return 0.0;
        }
        self.beta[j] = new;
        for (ri, &a) in self.r.iter_mut().zip(col) {
            *ri -= a * delta;
        }
        delta.abs() * vj.sqrt()
    }

    /// Exact minimizer on `support` with the current signs, kept only if the
    /// signs agree.
    fn polish(&mut self, support: &[usize]) {
        let k = support.len();
        if k == 0 {
            return;
        }
        let nf = self.r.len() as f64;
        let xa = self.x.select_cols(support);
        let h = xa.weighted_gram(self.w).scale(1.0 / nf);
        let Ok(chol) = Cholesky::new(&h, SINGULAR_TOL) else {
            return;
        };
        let wr: Vec<f64> = self.r.iter().zip(self.w).map(|(a, b)| a * b).collect();
        let g = xa.tr_mul_vec(&wr);
        let rhs: Vec<f64> = (0..k)
            .map(|a| {
                let hb: f64 = (0..k).map(|b| h[(a, b)] * self.beta[support[b]]).sum();
                g[a] / nf + hb - self.lambda * self.beta[support[a]].signum()
            })
            .collect();
        let sol = chol.solve(&rhs);
        if support
            .iter()
            .zip(&sol)
            .any(|(&j, s)| s.signum() != self.beta[j].signum() || *s == 0.0)
        {
            return;
        }
        let delta: Vec<f64> = support
            .iter()
            .zip(&sol)
            .map(|(&j, s)| s - self.beta[j])
            .collect();
        for (ri, d) in self.r.iter_mut().zip(xa.mul_vec(&delta)) {
            *ri -= d;
        }
        for (&j, s) in support.iter().zip(sol) {
            self.beta[j] = s;
        }
    }
}

/// Warm-started solutions along a decreasing grid.
pub(crate) fn path(x: &Matrix, y: &[f64], grid: &[f64], spec: &FitSpec) -> Result<Vec<Vec<f64>>> {
    let mut theta = vec![0.0; x.ncols()];
    let mut out = Vec::with_capacity(grid.len());
    for &lambda in grid {
        if lambda == 0.0 {
            newton(x, y, &mut theta, spec.tolerance, spec.max_iter)?;
        } else {
            prox_newton(x, y, lambda, &mut theta, spec.tolerance, spec.max_iter)?;
        }
        out.push(theta.clone());
    }
    Ok(out)
}

fn fit_result(x: &Matrix, y: &[f64], theta: Vec<f64>, lambda: Option<f64>) -> FitResult {
    let prob = x.mul_vec(&theta);
    let rss = y
        .iter()
        .zip(&prob)
        .map(|(a, e)| (a - sigmoid(*e)).powi(2))
        .sum();
    FitResult::new(ParametricModel::logistic(theta), lambda, rss)
}

#[derive(Debug)]
pub(crate) struct LogisticCache {
    folds: Option<CvFolds>,
    /// Training rows of each fold.
    fold_x: Vec<Matrix>,
}

impl LogisticCache {
    pub(crate) fn new(x: &Matrix, folds: Option<CvFolds>) -> Self {
        let fold_x = folds
            .as_ref()
            .map(|f| f.train_idx.iter().map(|idx| x.select_rows(idx)).collect())
            .unwrap_or_default();
        Self { folds, fold_x }
    }

    pub(crate) fn fit_cv(&self, x: &Matrix, y: &[f64], spec: &FitSpec) -> Result<FitResult> {
        check_labels(y)?;
        let n = x.nrows() as f64;
        let centered: Vec<f64> = y.iter().map(|v| v - 0.5).collect();
        let lambda_max = x
            .tr_mul_vec(&centered)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            / n;
        let grid = resolve_grid(spec, lambda_max)?;

        let best = match (&self.folds, grid.len()) {
            (Some(folds), len) if len > 1 => {
                let mut dev = vec![0.0; len];
                for (f, xh) in folds.test_x.iter().enumerate() {
                    let ytr: Vec<f64> = folds.train_idx[f].iter().map(|&i| y[i]).collect();
                    let yh: Vec<f64> = folds.test_idx[f].iter().map(|&i| y[i]).collect();
                    let thetas = check_labels(&ytr)
                        .and_then(|_| path(&self.fold_x[f], &ytr, &grid, spec))
                        .map_err(|e| Error::FoldFailed {
                            fold: f,
                            source: Box::new(e),
                        })?;
                    for (k, th) in thetas.iter().enumerate() {
                        let prob: Vec<f64> = xh.mul_vec(th).into_iter().map(sigmoid).collect();
                        dev[k] += deviance(&yh, &prob);
                    }
                }
                argmin_first(&dev)
            }
            _ => 0,
        };

        let theta = path(x, y, &grid[..=best], spec)?
            .pop()
            .expect("nonempty grid");
        Ok(fit_result(x, y, theta, Some(grid[best])))
    }
}

/// Unpenalized logistic refit on the support of `fit`.
pub(crate) fn relax(x: &Matrix, y: &[f64], fit: FitResult, spec: &FitSpec) -> Result<FitResult> {
    let support: Vec<usize> = (0..x.ncols())
        .filter(|&j| fit.model.theta[j] != 0.0)
        .collect();
    if support.is_empty() {
        let mut out = fit_result(x, y, vec![0.0; x.ncols()], fit.lambda_selected);
        out.flags.push(FitFlag::EmptyActiveSet);
        return Ok(out);
    }
    if support.len() > x.nrows() {
        return Err(Error::Saturated {
            active: support.len(),
            n: x.nrows(),
        });
    }
    let sub = x.select_cols(&support);
    let mut coef = vec![0.0; support.len()];
    newton(&sub, y, &mut coef, spec.tolerance, spec.max_iter)?;
    let mut theta = vec![0.0; x.ncols()];
    for (&j, c) in support.iter().zip(coef) {
        theta[j] = c;
    }
    let mut out = fit_result(x, y, theta, fit.lambda_selected);
    out.active_count = support.len();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::models::{fit_logistic, fit_relaxed_lasso, predict, FitAlgorithm};
    use crate::rng::SeedStream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn one_dim(pairs: &[(f64, f64, usize)]) -> Dataset {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &(x, y, k) in pairs {
            for _ in 0..k {
                xs.push(x);
                ys.push(y);
            }
        }
        Dataset::new(
            Matrix::from_col_major(xs.len(), 1, xs).unwrap(),
            Some(ys),
            None,
        )
        .unwrap()
    }

    fn random_problem(seed: u64, n: usize, p: usize) -> Dataset {
        let mut rng = SeedStream::new(seed).rng();
        let x = Matrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
        let mut theta = vec![0.0; p];
        theta.iter_mut().take(3).for_each(|t| *t = 1.0);
        let y = x
            .mul_vec(&theta)
            .into_iter()
            .map(|e| {
                if rng.random::<f64>() < sigmoid(e) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Dataset::new(x, Some(y), None).unwrap()
    }

    /// Scalar Newton iteration written out longhand.
    fn scalar_newton(xs: &[f64], ys: &[f64]) -> f64 {
        let mut t = 0.0;
        for _ in 0..100 {
            let (mut g, mut h) = (0.0, 0.0);
            for (&x, &y) in xs.iter().zip(ys) {
                let p = 1.0 / (1.0 + (-t * x).exp());
                g += x * (y - p);
                h += x * x * p * (1.0 - p);
            }
            t += g / h;
        }
        t
    }

    #[test]
    fn huge_penalty_gives_zero() {
        let d = random_problem(1, 80, 5);
        let f = fit_logistic(&d, &FitSpec::new(FitAlgorithm::LogisticL1).with_lambda(1e3)).unwrap();
        assert!(f.model.theta.iter().all(|t| *t == 0.0));
        assert!(predict(&f.model, d.x()).unwrap().iter().all(|p| *p == 0.5));
    }

    #[test]
    fn separated_points_are_rejected() {
        let d = one_dim(&[(-1.0, 0.0, 10), (1.0, 1.0, 10)]);
        let r = fit_logistic(&d, &FitSpec::new(FitAlgorithm::LogisticL1).with_lambda(0.0));
        assert_eq!(
            r.unwrap_err(),
            Error::SeparableData {
                bound: SEPARATION_BOUND
            }
        );
    }

    #[test]
    fn overlapping_points_match_scalar_newton() {
        let d = one_dim(&[(1.0, 1.0, 7), (1.0, 0.0, 3), (-1.0, 0.0, 7), (-1.0, 1.0, 3)]);
        let f = fit_logistic(&d, &FitSpec::new(FitAlgorithm::LogisticL1).with_lambda(0.0)).unwrap();
        let oracle = scalar_newton(d.x().col(0), d.y().unwrap());
        assert!((oracle - (7.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((f.model.theta[0] - oracle).abs() < 1e-6);
    }

    #[test]
    fn single_class_is_rejected() {
        let d = one_dim(&[(1.0, 1.0, 5), (2.0, 1.0, 5)]);
        assert_eq!(
            fit_logistic(&d, &FitSpec::new(FitAlgorithm::LogisticL1)).unwrap_err(),
            Error::SingleClass
        );
    }

    #[test]
    fn penalized_fit_satisfies_optimality() {
        let d = random_problem(2, 200, 10);
        let lambda = 0.02;
        let spec = FitSpec::new(FitAlgorithm::LogisticL1).with_lambda(lambda);
        let f = fit_logistic(&d, &spec).unwrap();
        let prob = predict(&f.model, d.x()).unwrap();
        let resid: Vec<f64> = d
            .y()
            .unwrap()
            .iter()
            .zip(&prob)
            .map(|(a, b)| a - b)
            .collect();
        let g = d.x().tr_mul_vec(&resid);
        for (j, gj) in g.iter().enumerate() {
            let gj = gj / 200.0;
            let th = f.model.theta[j];
            if th == 0.0 {
                assert!(gj.abs() <= lambda + 1e-6);
            } else {
                assert!(
                    (gj - lambda * th.signum()).abs() < 1e-6,
                    "coordinate {j}: {gj}"
                );
            }
        }
    }

    #[test]
    fn cv_fit_selects_the_signal() {
        let d = random_problem(3, 400, 10);
        let f = fit_logistic(&d, &FitSpec::new(FitAlgorithm::LogisticL1)).unwrap();
        assert!(f.model.theta[..3].iter().all(|t| *t > 0.3));
        assert!(f.lambda_selected.unwrap() > 0.0);
    }

    #[test]
    fn relaxed_fit_is_unpenalized_on_support() {
        let d = random_problem(4, 300, 8);
        let spec = FitSpec::new(FitAlgorithm::LogisticL1).with_lambda(0.05);
        let pen = fit_logistic(&d, &spec).unwrap();
        let relaxed = fit_relaxed_lasso(&d, &spec).unwrap();
        let support: Vec<usize> = (0..8).filter(|&j| pen.model.theta[j] != 0.0).collect();
        let sub = Dataset::new(
            d.x().select_cols(&support),
            d.y().map(<[f64]>::to_vec),
            None,
        )
        .unwrap();
        let plain = fit_logistic(&sub, &spec.clone().with_lambda(0.0)).unwrap();
        for (k, &j) in support.iter().enumerate() {
            assert!((relaxed.model.theta[j] - plain.model.theta[k]).abs() < 1e-8);
        }
        assert!(l1(&relaxed.model.theta) > l1(&pen.model.theta));
    }

    #[test]
    fn deviance_of_perfect_prediction_is_zero() {
        assert!(deviance(&[1.0, 0.0], &[1.0, 0.0]) < 1e-12);
        assert!((deviance(&[1.0], &[0.5]) - 2.0 * 2f64.ln()).abs() < 1e-12);
    }
}
