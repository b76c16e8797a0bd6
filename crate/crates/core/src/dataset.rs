use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Covariates with optional outcomes and group labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Option<Vec<f64>>,
    groups: Option<Vec<String>>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Option<Vec<f64>>, groups: Option<Vec<String>>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::with_names(x, y, groups, names)
    }

    pub fn with_names(
        x: Matrix,
        y: Option<Vec<f64>>,
        groups: Option<Vec<String>>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n = x.nrows();
        if n == 0 || x.ncols() == 0 {
            return Err(Error::InvalidInput(format!(
                "empty design ({n}x{})",
                x.ncols()
            )));
        }
        if !x.is_finite() {
            return Err(Error::InvalidInput(
                "design contains non-finite entries".into(),
            ));
        }
        if let Some(y) = &y {
            if y.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "{} outcomes for {n} rows",
                    y.len()
                )));
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(
                    "outcomes contain non-finite entries".into(),
                ));
            }
        }
        if let Some(g) = &groups {
            if g.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "{} group labels for {n} rows",
                    g.len()
                )));
            }
        }
        if feature_names.len() != x.ncols() {
            return Err(Error::ShapeMismatch(
                "feature name count differs from column count".into(),
            ));
        }
        Ok(Self {
            x,
            y,
            groups,
            feature_names,
        })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> Option<&[f64]> {
        self.y.as_deref()
    }

    /// Outcomes, or [`Error::MissingColumn`] when the dataset is unlabeled.
    pub fn require_y(&self) -> Result<&[f64]> {
        self.y
            .as_deref()
            .ok_or_else(|| Error::MissingColumn("outcome".into()))
    }

    pub fn groups(&self) -> Option<&[String]> {
        self.groups.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Same covariates and groups with new outcomes.
    pub fn with_y(&self, y: Vec<f64>) -> Result<Self> {
        Self::with_names(
            self.x.clone(),
            Some(y),
            self.groups.clone(),
            self.feature_names.clone(),
        )
    }

    pub fn without_y(&self) -> Self {
        Self {
            y: None,
            ..self.clone()
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            y: self.y.as_ref().map(|y| idx.iter().map(|&i| y[i]).collect()),
            groups: self
                .groups
                .as_ref()
                .map(|g| idx.iter().map(|&i| g[i].clone()).collect()),
            feature_names: self.feature_names.clone(),
        }
    }
}
