//! K-fold cross-validation, optionally keeping groups intact.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::errx::{ErrorEstimate, Estimator};
use crate::loss::{point_predictions, LossKind};
use crate::models::{FitSpec, Fitter};
use crate::rng::{tag, SeedStream};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    assignments: Vec<usize>,
    k: usize,
}

impl FoldPlan {
    /// Validates that every fold in `0..k` is used and no index is out of range.
    pub fn new(assignments: Vec<usize>, k: usize) -> Result<Self> {
        let mut seen = vec![false; k];
        for &f in &assignments {
            *seen.get_mut(f).ok_or_else(|| {
                Error::InvalidInput(format!("fold {f} out of range for K = {k}"))
            })? = true;
        }
        if k < 2 || seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput(
                "every one of K >= 2 folds must be nonempty".into(),
            ));
        }
        Ok(Self { assignments, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        self.assignments.iter().for_each(|&f| sizes[f] += 1);
        sizes
    }

    /// Row indices held out by fold `f`.
    pub fn held_out(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == f)
            .collect()
    }

    /// Row indices used for training when fold `f` is held out.
    pub fn training(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != f)
            .collect()
    }

    /// True when no group label spans two folds.
    pub fn respects_groups(&self, groups: &[String]) -> bool {
        let mut fold_of: BTreeMap<&str, usize> = BTreeMap::new();
        groups
            .iter()
            .zip(&self.assignments)
            .all(|(g, &f)| *fold_of.entry(g.as_str()).or_insert(f) == f)
    }
}

/// Balanced random fold assignment. With `groups`, whole groups are dealt to
/// folds so fold sizes differ by at most one group.
pub fn make_folds(n: usize, k: usize, groups: Option<&[String]>, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    let mut rng = SeedStream::new(seed).child(tag::FOLDS).rng();
    let assignments = match groups {
        None => {
            if k > n {
                return Err(Error::InvalidInput(format!("{k} folds for {n} rows")));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut a = vec![0; n];
            for (pos, &i) in order.iter().enumerate() {
                a[i] = pos % k;
            }
            a
        }
        Some(groups) => {
            if groups.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "{} group labels for {n} rows",
                    groups.len()
                )));
            }
            let mut labels: Vec<&str> = groups.iter().map(String::as_str).collect();
            labels.sort_unstable();
            labels.dedup();
            if labels.len() < k {
                return Err(Error::TooFewGroups {
                    folds: k,
                    groups: labels.len(),
                });
            }
            labels.shuffle(&mut rng);
            let fold_of: BTreeMap<&str, usize> = labels
                .iter()
                .enumerate()
                .map(|(pos, g)| (*g, pos % k))
                .collect();
            groups.iter().map(|g| fold_of[g.as_str()]).collect()
        }
    };
    FoldPlan::new(assignments, k)
}

/// Pooled K-fold estimate: the mean of all `n` held-out losses.
///
/// `replicate_values` holds the mean held-out loss of each fold.
pub fn cv_error(
    data: &Dataset,
    spec: &FitSpec,
    loss: LossKind,
    plan: &FoldPlan,
) -> Result<ErrorEstimate> {
    loss.check(spec.algorithm.model_kind())?;
    let y = data.require_y()?;
    if plan.assignments().len() != data.n() {
        return Err(Error::ShapeMismatch(format!(
            "fold plan for {} rows, data has {}",
            plan.assignments.len(),
            data.n()
        )));
    }
    let mut total = 0.0;
    let mut per_fold = Vec::with_capacity(plan.k());
    for f in 0..plan.k() {
        let (train, held) = (plan.training(f), plan.held_out(f));
        let wrap = |e| Error::FoldFailed {
            fold: f,
            source: Box::new(e),
        };
        let x_train = data.x().select_rows(&train);
        let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let fit = Fitter::new(&x_train, spec)
            .and_then(|fitter| fitter.fit(&y_train))
            .map_err(wrap)?;
        let pred =
            point_predictions(&fit.model, &data.x().select_rows(&held), loss).map_err(wrap)?;
        let sum: f64 = held
            .iter()
            .zip(&pred)
            .map(|(&i, &p)| loss.eval(y[i], p))
            .sum();
        total += sum;
        per_fold.push(sum / held.len() as f64);
    }
    Ok(ErrorEstimate {
        value: total / data.n() as f64,
        replicate_values: per_fold,
        estimator: Estimator::Cv,
        correction_factor: 1.0,
    })
}
