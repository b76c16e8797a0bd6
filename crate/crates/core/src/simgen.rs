//! Synthetic data-generating processes for linear and logistic simulations,
//! with covariate shift, misspecified outcome transforms and class imbalance.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::{sigmoid, ModelKind};
use crate::rng::{tag, SeedStream, StreamRng};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Draws used by the Monte Carlo signal-to-noise computation.
pub const SNR_DRAWS: usize = 100_000;

/// Per-entry normal law, parameterized by variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalLaw {
    pub mean: f64,
    pub variance: f64,
}

impl NormalLaw {
    pub const STANDARD: NormalLaw = NormalLaw {
        mean: 0.0,
        variance: 1.0,
    };

    pub fn new(mean: f64, variance: f64) -> Self {
        Self { mean, variance }
    }

    fn sample_matrix(&self, rows: usize, cols: usize, rng: &mut StreamRng) -> Matrix {
        let sd = self.variance.sqrt();
        Matrix::from_fn(rows, cols, |_, _| {
            self.mean + sd * rng.sample::<f64, _>(StandardNormal)
        })
    }

    fn sample_row(&self, p: usize, rng: &mut StreamRng) -> Vec<f64> {
        let sd = self.variance.sqrt();
        (0..p)
            .map(|_| self.mean + sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// `E[xxᵀ] = variance·I + mean²·11ᵀ` for a `p`-vector of i.i.d. entries.
    pub fn second_moment(&self, p: usize) -> Matrix {
        let m2 = self.mean * self.mean;
        Matrix::from_fn(p, p, |a, b| if a == b { self.variance + m2 } else { m2 })
    }
}

/// `count` leading coefficients equal to `strength`, the rest zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub count: usize,
    pub strength: f64,
}

/// Transform applied to the leading covariates before forming the signal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Misspec {
    #[default]
    None,
    /// `x ↦ x²`.
    Quadratic { fraction: f64 },
    /// `x ↦ sign(x)|x|^exponent`.
    Power { exponent: f64, fraction: f64 },
}

impl Misspec {
    /// Number of leading coordinates transformed out of `p`.
    pub fn affected(&self, p: usize) -> usize {
        match *self {
            Misspec::None => 0,
            // The epsilon keeps fractions such as 1/3 of 9 from rounding up to 4.
            Misspec::Quadratic { fraction } | Misspec::Power { fraction, .. } => {
                ((fraction * p as f64 - 1e-9).ceil().max(0.0) as usize).min(p)
            }
        }
    }

    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        match *self {
            Misspec::None => v,
            Misspec::Quadratic { .. } => v * v,
            Misspec::Power { exponent, .. } => v.signum() * v.abs().powf(exponent),
        }
    }

    fn validate(&self) -> Result<()> {
        let fraction = match *self {
            Misspec::None => return Ok(()),
            Misspec::Quadratic { fraction } => fraction,
            Misspec::Power { exponent, fraction } => {
                if !(exponent > 0.0 && exponent.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "power exponent {exponent} must be positive"
                    )));
                }
                fraction
            }
        };
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "misspecification fraction {fraction} outside (0, 1]"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub n: usize,
    pub n_test: usize,
    pub p: usize,
    pub coef: Coefficients,
    pub train_law: NormalLaw,
    pub test_law: NormalLaw,
    /// Noise standard deviation; present exactly for linear outcomes.
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub misspec: Misspec,
    /// Majority:minority training label ratio (logistic only); the majority class is 1.
    #[serde(default)]
    pub imbalance_ratio: Option<f64>,
    pub seed: u64,
    /// When set, training covariates come from this seed instead of `seed`,
    /// holding the design fixed across replications.
    #[serde(default)]
    pub design_seed: Option<u64>,
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n_test == 0 || self.p == 0 {
            return Err(Error::InvalidInput(
                "n, n_test and p must be positive".into(),
            ));
        }
        if self.coef.count > self.p || !self.coef.strength.is_finite() {
            return Err(Error::InvalidInput(format!(
                "{} nonzero coefficients with p = {}",
                self.coef.count, self.p
            )));
        }
        for law in [self.train_law, self.test_law] {
            if !(law.variance > 0.0 && law.variance.is_finite() && law.mean.is_finite()) {
                return Err(Error::InvalidInput(format!("invalid normal law {law:?}")));
            }
        }
        if let Some(s) = self.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "noise sd {s} must be finite and nonnegative"
                )));
            }
        }
        if let Some(r) = self.imbalance_ratio {
            if !(r >= 1.0 && r.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "imbalance ratio {r} must be at least 1"
                )));
            }
        }
        self.misspec.validate()
    }

    pub fn theta(&self) -> Vec<f64> {
        (0..self.p)
            .map(|j| {
                if j < self.coef.count {
                    self.coef.strength
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn true_model(&self) -> TrueModel {
        TrueModel {
            kind: if self.sigma.is_some() {
                ModelKind::GaussianLinear
            } else {
                ModelKind::BernoulliLogistic
            },
            theta: self.theta(),
            sigma: self.sigma,
            misspec: self.misspec,
        }
    }

    fn design_stream(&self) -> SeedStream {
        SeedStream::new(self.design_seed.unwrap_or(self.seed))
    }
}

/// The law that generated a simulation's outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    pub kind: ModelKind,
    pub theta: Vec<f64>,
    pub sigma: Option<f64>,
    pub misspec: Misspec,
}

impl TrueModel {
    /// Linear predictor `g(x)ᵀθ` for each row of `x`.
    pub fn signal(&self, x: &Matrix) -> Vec<f64> {
        let m = self.misspec.affected(x.ncols());
        let mut out = vec![0.0; x.nrows()];
        for (j, &t) in self.theta.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(x.col(j)) {
                *o += t * if j < m { self.misspec.apply(v) } else { v };
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SimInstance {
    pub train: Dataset,
    /// Test covariates with their realized outcomes.
    pub test: Dataset,
    pub true_model: TrueModel,
}

fn gaussian_outcomes(model: &TrueModel, x: &Matrix, sigma: f64, rng: &mut StreamRng) -> Vec<f64> {
    model
        .signal(x)
        .into_iter()
        .map(|s| s + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn bernoulli(prob: f64, rng: &mut StreamRng) -> f64 {
    if rng.random::<f64>() < prob {
        1.0
    } else {
        0.0
    }
}

pub fn gen_linear(spec: &DgpSpec) -> Result<SimInstance> {
    spec.validate()?;
    let sigma = spec
        .sigma
        .ok_or_else(|| Error::InvalidInput("linear generation needs a noise sd".into()))?;
    let root = SeedStream::new(spec.seed);
    let model = spec.true_model();
    let x = spec.train_law.sample_matrix(
        spec.n,
        spec.p,
        &mut spec.design_stream().child(tag::TRAIN_X).rng(),
    );
    let y = gaussian_outcomes(&model, &x, sigma, &mut root.child(tag::TRAIN_NOISE).rng());
    let xt = spec
        .test_law
        .sample_matrix(spec.n_test, spec.p, &mut root.child(tag::TEST_X).rng());
    let yt = gaussian_outcomes(&model, &xt, sigma, &mut root.child(tag::TEST_NOISE).rng());
    Ok(SimInstance {
        train: Dataset::new(x, Some(y), None)?,
        test: Dataset::new(xt, Some(yt), None)?,
        true_model: model,
    })
}

pub fn gen_logistic(spec: &DgpSpec) -> Result<SimInstance> {
    spec.validate()?;
    if spec.sigma.is_some() {
        return Err(Error::InvalidInput(
            "logistic generation takes no noise sd".into(),
        ));
    }
    let root = SeedStream::new(spec.seed);
    let model = spec.true_model();
    let (x, y) = match spec.imbalance_ratio {
        None => {
            let x = spec.train_law.sample_matrix(
                spec.n,
                spec.p,
                &mut spec.design_stream().child(tag::TRAIN_X).rng(),
            );
            let mut rng = root.child(tag::TRAIN_NOISE).rng();
            let y = model
                .signal(&x)
                .into_iter()
                .map(|s| bernoulli(sigmoid(s), &mut rng))
                .collect();
            (x, y)
        }
        Some(ratio) => imbalanced_sample(spec, &model, ratio, &root)?,
    };
    let xt = spec
        .test_law
        .sample_matrix(spec.n_test, spec.p, &mut root.child(tag::TEST_X).rng());
    let mut rng = root.child(tag::TEST_NOISE).rng();
    let yt = model
        .signal(&xt)
        .into_iter()
        .map(|s| bernoulli(sigmoid(s), &mut rng))
        .collect();
    Ok(SimInstance {
        train: Dataset::new(x, Some(y), None)?,
        test: Dataset::new(xt, Some(yt), None)?,
        true_model: model,
    })
}

/// Keeps drawing `(x, y)` pairs and accepting them while their class quota
/// is open, until `n·r/(r+1)` ones and the remaining zeros are collected.
fn imbalanced_sample(
    spec: &DgpSpec,
    model: &TrueModel,
    ratio: f64,
    root: &SeedStream,
) -> Result<(Matrix, Vec<f64>)> {
    let r = ratio.floor() as usize;
    let minority = spec.n / (r + 1);
    let majority = spec.n - minority;
    let max_draws = 50 * spec.n;
    let mut x_rng = spec.design_stream().child(tag::TRAIN_X).rng();
    let mut y_rng = root.child(tag::TRAIN_NOISE).rng();
    let (mut ones, mut zeros) = (0, 0);
    let mut rows = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    let mut draws = 0;
    while ones < majority || zeros < minority {
        if draws == max_draws {
            return Err(Error::InfeasibleImbalance {
                majority: ones,
                minority: zeros,
                draws,
            });
        }
        draws += 1;
        let row = spec.train_law.sample_row(spec.p, &mut x_rng);
        let xm = Matrix::from_col_major(1, spec.p, row.clone())?;
        let label = bernoulli(sigmoid(model.signal(&xm)[0]), &mut y_rng);
        let open = if label == 1.0 { &mut ones } else { &mut zeros };
        let quota = if label == 1.0 { majority } else { minority };
        if *open < quota {
            *open += 1;
            rows.push(row);
            labels.push(label);
        }
    }
    Ok((Matrix::from_rows(&rows)?, labels))
}

/// Monte Carlo `Var(g(x)ᵀθ)/σ²` under the training law.
pub fn snr(spec: &DgpSpec) -> Result<f64> {
    spec.validate()?;
    let sigma = spec
        .sigma
        .ok_or_else(|| Error::InvalidInput("signal-to-noise ratio needs a noise sd".into()))?;
    if sigma <= 0.0 {
        return Err(Error::InvalidInput(
            "signal-to-noise ratio needs a positive noise sd".into(),
        ));
    }
    let model = spec.true_model();
    let x = spec.train_law.sample_matrix(
        SNR_DRAWS,
        spec.p,
        &mut SeedStream::new(spec.seed).child(tag::SNR).rng(),
    );
    let s = model.signal(&x);
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let var = s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (s.len() - 1) as f64;
    Ok(var / (sigma * sigma))
}
