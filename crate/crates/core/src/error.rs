use thiserror::Error;

/// Errors raised by fitting, estimation, simulation and data handling.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("design matrix is numerically rank-deficient")]
    SingularDesign,
    #[error("coordinate descent did not converge within {max_iter} sweeps at lambda = {lambda}")]
    NoConvergence { lambda: f64, max_iter: usize },
    #[error("lambda grid is degenerate: the response carries no signal along any feature")]
    DegenerateGrid,
    #[error("unpenalized logistic fit diverged (coefficient magnitude above {bound})")]
    SeparableData { bound: f64 },
    #[error("binary outcome contains a single class")]
    SingleClass,
    #[error("active set size {active} leaves no residual degrees of freedom with n = {n}")]
    Saturated { active: usize, n: usize },
    #[error("model carries no noise variance")]
    MissingSigma,
    #[error("loss {loss} is incompatible with a {model} model")]
    IncompatibleLoss {
        loss: &'static str,
        model: &'static str,
    },
    #[error("{failed} of {total} bootstrap refits failed (last error: {last})")]
    FailedReplicates {
        failed: usize,
        total: usize,
        last: Box<Error>,
    },
    #[error("fold {fold} failed: {source}")]
    FoldFailed { fold: usize, source: Box<Error> },
    #[error("cannot build {folds} folds from {groups} groups")]
    TooFewGroups { folds: usize, groups: usize },
    #[error("true test error is zero; standardized metrics are undefined")]
    ZeroTruth,
    #[error("cannot reach a {majority}:{minority} label split within {draws} draws")]
    InfeasibleImbalance {
        majority: usize,
        minority: usize,
        draws: usize,
    },
    #[error("dataset carries no group labels (or fewer than two distinct groups)")]
    MissingGroups,
    #[error("split left one side empty")]
    DegenerateSplit,
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("non-numeric feature column `{0}`")]
    NonNumericFeature(String),
    #[error("parse error at row {row}, column `{column}`: {message}")]
    ParseError {
        row: usize,
        column: String,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
