//! Prediction-error estimation under covariate shift by parametric bootstrap.
//!
//! Given labeled training data and unlabeled test covariates, the crate fits
//! a parametric model, simulates outcomes from it at both covariate sets, and
//! refits to estimate the error the trained model will make on the test set.
//! Cross-validation, Mallows-type Cp and covariance penalties are provided as
//! baselines, with simulation generators and comparison metrics.

pub mod baselines;
mod bootstrap;
pub mod dataio;
pub mod dataset;
pub mod error;
pub mod errx;
pub mod insample;
pub mod linalg;
pub mod loss;
pub mod metrics;
pub mod models;
pub mod par;
pub mod rng;
pub mod simgen;

pub use baselines::{cv_error, make_folds, FoldPlan};
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use errx::{
    closed_form_ols_errx, errx_both, errx_dec, errx_dir, multiplicative_factor, BootstrapConfig,
    Correction, ErrorEstimate, ErrxReport, Estimator,
};
pub use insample::{InSampleEstimate, InSampleMethod};
pub use linalg::Matrix;
pub use loss::LossKind;
pub use models::{
    FitAlgorithm, FitResult, FitSpec, Fitter, LambdaGrid, ModelKind, ParametricModel,
};
pub use par::Execution;
