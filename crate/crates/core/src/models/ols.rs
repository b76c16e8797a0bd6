use super::{residual_ss, sigma2_from_rss, FitResult, ParametricModel, SINGULAR_TOL};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};

/// Cholesky factor of `XᵀX`; fails when `n < p` or the design is singular.
pub(crate) fn factor(x: &Matrix) -> Result<Cholesky> {
    if x.nrows() < x.ncols() {
        return Err(Error::InvalidInput(format!(
            "least squares needs n >= p (n = {}, p = {})",
            x.nrows(),
            x.ncols()
        )));
    }
    Cholesky::new(&x.gram(), SINGULAR_TOL)
}

pub(crate) fn fit_with(x: &Matrix, y: &[f64], chol: &Result<Cholesky>) -> Result<FitResult> {
    let chol = chol.as_ref().map_err(Clone::clone)?;
    if y.len() != x.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "{} outcomes for {} rows",
            y.len(),
            x.nrows()
        )));
    }
    let theta = chol.solve(&x.tr_mul_vec(y));
    let rss = residual_ss(x, y, &theta);
    // A square invertible design interpolates: no residual degrees of freedom, zero noise.
    let sigma2 = if x.nrows() == x.ncols() {
        0.0
    } else {
        sigma2_from_rss(rss, x.nrows(), x.ncols())?
    };
    let p = x.ncols();
    let mut fit = FitResult::new(ParametricModel::gaussian(theta, sigma2), None, rss);
    fit.active_count = p;
    Ok(fit)
}
