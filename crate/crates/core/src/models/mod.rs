//! Fitting algorithms, prediction, and parametric outcome sampling.

pub mod lasso;
pub mod logistic;
pub mod ols;

use crate::baselines::{make_folds, FoldPlan};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::rng::StreamRng;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use lasso::{kkt_violation, lasso_objective, soft_threshold};

/// Relative pivot threshold below which a Gram matrix is declared singular.
pub const SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    GaussianLinear,
    BernoulliLogistic,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::GaussianLinear => "gaussian-linear",
            ModelKind::BernoulliLogistic => "bernoulli-logistic",
        }
    }
}

/// A fitted conditional law `P^θ(Y | X)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricModel {
    pub kind: ModelKind,
    pub theta: Vec<f64>,
    /// Noise variance; present only for `GaussianLinear`.
    pub sigma2: Option<f64>,
}

impl ParametricModel {
    pub fn gaussian(theta: Vec<f64>, sigma2: f64) -> Self {
        Self {
            kind: ModelKind::GaussianLinear,
            theta,
            sigma2: Some(sigma2),
        }
    }

    pub fn logistic(theta: Vec<f64>) -> Self {
        Self {
            kind: ModelKind::BernoulliLogistic,
            theta,
            sigma2: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        match (self.kind, self.sigma2) {
            (ModelKind::GaussianLinear, Some(s)) if s >= 0.0 && s.is_finite() => Ok(()),
            (ModelKind::GaussianLinear, Some(_)) => {
                Err(Error::InvalidInput("negative noise variance".into()))
            }
            (ModelKind::GaussianLinear, None) => Err(Error::MissingSigma),
            (ModelKind::BernoulliLogistic, None) => Ok(()),
            (ModelKind::BernoulliLogistic, Some(_)) => Err(Error::InvalidInput(
                "logistic model cannot carry a noise variance".into(),
            )),
        }
    }
}

#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Linear predictor `Xθ` for Gaussian models, success probability for logistic ones.
pub fn predict(model: &ParametricModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.ncols() != model.theta.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} columns against {} coefficients",
            x.ncols(),
            model.theta.len()
        )));
    }
    let eta = x.mul_vec(&model.theta);
    Ok(match model.kind {
        ModelKind::GaussianLinear => eta,
        ModelKind::BernoulliLogistic => eta.into_iter().map(sigmoid).collect(),
    })
}

/// Draws one outcome per row of `x` from the model.
pub fn sample_outcomes(
    model: &ParametricModel,
    x: &Matrix,
    rng: &mut StreamRng,
) -> Result<Vec<f64>> {
    let mean = predict(model, x)?;
    match model.kind {
        ModelKind::GaussianLinear => {
            let sigma2 = model.sigma2.ok_or(Error::MissingSigma)?;
            let sd = sigma2.sqrt();
            Ok(mean
                .into_iter()
                .map(|m| {
                    let z: f64 = rng.sample(StandardNormal);
                    m + sd * z
                })
                .collect())
        }
        ModelKind::BernoulliLogistic => Ok(mean
            .into_iter()
            .map(|prob| {
                let u: f64 = rng.random();
                if u < prob {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitAlgorithm {
    Ols,
    LassoCv,
    RelaxedLasso,
    LogisticL1,
}

impl FitAlgorithm {
    pub fn model_kind(self) -> ModelKind {
        match self {
            FitAlgorithm::LogisticL1 => ModelKind::BernoulliLogistic,
            _ => ModelKind::GaussianLinear,
        }
    }
}

/// Regularization grid: data-driven (`"auto"`) or an explicit strictly
/// decreasing list of nonnegative values.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum LambdaGrid {
    #[default]
    Auto,
    Explicit(Vec<f64>),
}

impl Serialize for LambdaGrid {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LambdaGrid::Auto => s.serialize_str("auto"),
            LambdaGrid::Explicit(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for LambdaGrid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Values(Vec<f64>),
        }
        match Raw::deserialize(d)? {
            Raw::Name(s) if s == "auto" => Ok(LambdaGrid::Auto),
            Raw::Name(s) => Err(serde::de::Error::custom(format!(
                "unknown lambda grid `{s}`"
            ))),
            Raw::Values(v) => Ok(LambdaGrid::Explicit(v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSpec {
    pub algorithm: FitAlgorithm,
    /// Folds used to select λ by cross-validation.
    pub cv_folds: usize,
    pub lambda_grid: LambdaGrid,
    /// Length of the automatic grid.
    pub n_lambda: usize,
    /// Smallest automatic λ as a fraction of λ_max.
    pub lambda_min_ratio: f64,
    pub tolerance: f64,
    pub max_iter: usize,
    /// Seed of the fold assignment used for λ selection.
    pub cv_seed: u64,
}

impl Default for FitSpec {
    fn default() -> Self {
        Self {
            algorithm: FitAlgorithm::Ols,
            cv_folds: 10,
            lambda_grid: LambdaGrid::Auto,
            n_lambda: 100,
            lambda_min_ratio: 1e-3,
            tolerance: 1e-9,
            max_iter: 100_000,
            cv_seed: 0,
        }
    }
}

impl FitSpec {
    pub fn new(algorithm: FitAlgorithm) -> Self {
        Self {
            algorithm,
            ..Self::default()
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda_grid = LambdaGrid::Explicit(vec![lambda]);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        if self.max_iter == 0 || self.cv_folds == 0 || self.n_lambda == 0 {
            return Err(Error::InvalidInput(
                "max_iter, cv_folds and n_lambda must be positive".into(),
            ));
        }
        if !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0) {
            return Err(Error::InvalidInput(
                "lambda_min_ratio must lie in (0, 1)".into(),
            ));
        }
        if let LambdaGrid::Explicit(v) = &self.lambda_grid {
            if v.is_empty() {
                return Err(Error::InvalidInput("explicit lambda grid is empty".into()));
            }
            if v.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                return Err(Error::InvalidInput(
                    "lambda values must be finite and nonnegative".into(),
                ));
            }
            if v.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::InvalidInput(
                    "explicit lambda grid must be strictly decreasing".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitFlag {
    /// The Lasso selected no feature; the relaxed fit is the all-zero model.
    EmptyActiveSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: ParametricModel,
    /// Number of nonzero coefficients.
    pub active_count: usize,
    pub lambda_selected: Option<f64>,
    /// `Σ (y - ŷ)²` with ŷ the fitted mean.
    pub training_residual_ss: f64,
    pub flags: Vec<FitFlag>,
}

impl FitResult {
    pub(crate) fn new(model: ParametricModel, lambda: Option<f64>, rss: f64) -> Self {
        let active_count = model.theta.iter().filter(|v| **v != 0.0).count();
        Self {
            model,
            active_count,
            lambda_selected: lambda,
            training_residual_ss: rss,
            flags: Vec::new(),
        }
    }

    pub fn has_flag(&self, flag: FitFlag) -> bool {
        self.flags.contains(&flag)
    }
}

pub(crate) fn residual_ss(x: &Matrix, y: &[f64], theta: &[f64]) -> f64 {
    let fitted = x.mul_vec(theta);
    y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Reid et al. noise estimate `‖y - Xθ̂‖² / (n - ŝ)`.
pub fn estimate_sigma2_lasso(data: &Dataset, fit: &FitResult) -> Result<f64> {
    let n = data.n();
    if fit.active_count >= n {
        return Err(Error::Saturated {
            active: fit.active_count,
            n,
        });
    }
    Ok(fit.training_residual_ss / (n - fit.active_count) as f64)
}

pub(crate) fn sigma2_from_rss(rss: f64, n: usize, active: usize) -> Result<f64> {
    if active >= n {
        return Err(Error::Saturated { active, n });
    }
    Ok(rss / (n - active) as f64)
}

/// Fold layout for λ selection, with per-fold held-out designs.
#[derive(Debug, Clone)]
pub(crate) struct CvFolds {
    pub train_idx: Vec<Vec<usize>>,
    pub test_idx: Vec<Vec<usize>>,
    pub test_x: Vec<Matrix>,
}

impl CvFolds {
    fn new(x: &Matrix, plan: &FoldPlan) -> Self {
        let k = plan.k();
        let mut train_idx = vec![Vec::new(); k];
        let mut test_idx = vec![Vec::new(); k];
        for (i, &f) in plan.assignments().iter().enumerate() {
            for (g, train) in train_idx.iter_mut().enumerate() {
                if g != f {
                    train.push(i);
                }
            }
            test_idx[f].push(i);
        }
        let test_x = test_idx.iter().map(|idx| x.select_rows(idx)).collect();
        Self {
            train_idx,
            test_idx,
            test_x,
        }
    }
}

#[derive(Debug)]
enum Cache {
    Ols(Result<Cholesky>),
    Lasso(lasso::LassoCache),
    Logistic(logistic::LogisticCache),
}

/// A fitting algorithm bound to a fixed design. Work that depends only on
/// the covariates (Gram products, factorizations, fold layouts) is done
/// once, so refitting many outcome vectors against the same design is cheap.
#[derive(Debug)]
pub struct Fitter<'a> {
    x: &'a Matrix,
    spec: &'a FitSpec,
    cache: Cache,
}

impl<'a> Fitter<'a> {
    pub fn new(x: &'a Matrix, spec: &'a FitSpec) -> Result<Self> {
        spec.validate()?;
        let needs_cv = match &spec.lambda_grid {
            LambdaGrid::Auto => true,
            LambdaGrid::Explicit(v) => v.len() > 1,
        };
        let folds = if needs_cv && spec.algorithm != FitAlgorithm::Ols {
            let n = x.nrows();
            if spec.cv_folds < 2 || spec.cv_folds > n {
                return Err(Error::InvalidInput(format!(
                    "cv_folds = {} with n = {n}",
                    spec.cv_folds
                )));
            }
            let plan = make_folds(n, spec.cv_folds, None, spec.cv_seed)?;
            Some(CvFolds::new(x, &plan))
        } else {
            None
        };
        let cache = match spec.algorithm {
            FitAlgorithm::Ols => Cache::Ols(ols::factor(x)),
            FitAlgorithm::LassoCv | FitAlgorithm::RelaxedLasso => {
                Cache::Lasso(lasso::LassoCache::new(x, folds))
            }
            FitAlgorithm::LogisticL1 => Cache::Logistic(logistic::LogisticCache::new(x, folds)),
        };
        Ok(Self { x, spec, cache })
    }

    pub fn spec(&self) -> &FitSpec {
        self.spec
    }

    pub fn x(&self) -> &Matrix {
        self.x
    }

    /// Fits the bound algorithm to outcomes `y`.
    pub fn fit(&self, y: &[f64]) -> Result<FitResult> {
        if y.len() != self.x.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "{} outcomes for {} rows",
                y.len(),
                self.x.nrows()
            )));
        }
        match &self.cache {
            Cache::Ols(chol) => ols::fit_with(self.x, y, chol),
            Cache::Lasso(c) => {
                let fit = c.fit_cv(self.x, y, self.spec)?;
                if self.spec.algorithm == FitAlgorithm::RelaxedLasso {
                    c.relax(self.x, y, fit)
                } else {
                    Ok(fit)
                }
            }
            Cache::Logistic(c) => c.fit_cv(self.x, y, self.spec),
        }
    }

    /// Penalized fit followed by an unpenalized refit on its support.
    pub fn fit_relaxed(&self, y: &[f64]) -> Result<FitResult> {
        match &self.cache {
            Cache::Ols(chol) => ols::fit_with(self.x, y, chol),
            Cache::Lasso(c) => {
                let fit = c.fit_cv(self.x, y, self.spec)?;
                c.relax(self.x, y, fit)
            }
            Cache::Logistic(c) => {
                let fit = c.fit_cv(self.x, y, self.spec)?;
                logistic::relax(self.x, y, fit, self.spec)
            }
        }
    }
}

/// Ordinary least squares.
pub fn fit_ols(data: &Dataset) -> Result<FitResult> {
    let y = data.require_y()?;
    ols::fit_with(data.x(), y, &ols::factor(data.x()))
}

/// Lasso with λ chosen by minimum cross-validated squared error.
pub fn fit_lasso_cv(data: &Dataset, spec: &FitSpec) -> Result<FitResult> {
    let spec = FitSpec {
        algorithm: FitAlgorithm::LassoCv,
        ..spec.clone()
    };
    Fitter::new(data.x(), &spec)?.fit(data.require_y()?)
}

/// Lasso support selection followed by an unpenalized refit on that support
/// (least squares for linear specs, logistic likelihood for `LogisticL1`).
pub fn fit_relaxed_lasso(data: &Dataset, spec: &FitSpec) -> Result<FitResult> {
    let spec = match spec.algorithm {
        FitAlgorithm::LogisticL1 => spec.clone(),
        _ => FitSpec {
            algorithm: FitAlgorithm::LassoCv,
            ..spec.clone()
        },
    };
    Fitter::new(data.x(), &spec)?.fit_relaxed(data.require_y()?)
}

/// L1-penalized (or, with λ = 0, plain) logistic regression.
pub fn fit_logistic(data: &Dataset, spec: &FitSpec) -> Result<FitResult> {
    let spec = FitSpec {
        algorithm: FitAlgorithm::LogisticL1,
        ..spec.clone()
    };
    Fitter::new(data.x(), &spec)?.fit(data.require_y()?)
}

/// Runs the algorithm named in `spec`.
pub fn fit(data: &Dataset, spec: &FitSpec) -> Result<FitResult> {
    Fitter::new(data.x(), spec)?.fit(data.require_y()?)
}

/// Automatic log-spaced grid from `lambda_max` down to `ratio * lambda_max`.
pub(crate) fn auto_grid(lambda_max: f64, n: usize, ratio: f64) -> Result<Vec<f64>> {
    if !(lambda_max > 0.0) || !lambda_max.is_finite() {
        return Err(Error::DegenerateGrid);
    }
    if n == 1 {
        return Ok(vec![lambda_max]);
    }
    let step = ratio.ln() / (n - 1) as f64;
    Ok((0..n)
        .map(|k| lambda_max * (step * k as f64).exp())
        .collect())
}

pub(crate) fn resolve_grid(spec: &FitSpec, lambda_max: f64) -> Result<Vec<f64>> {
    match &spec.lambda_grid {
        LambdaGrid::Auto => auto_grid(lambda_max, spec.n_lambda, spec.lambda_min_ratio),
        LambdaGrid::Explicit(v) => Ok(v.clone()),
    }
}

/// Index of the smallest CV score; ties keep the larger λ (earlier index).
pub(crate) fn argmin_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    best
}
