//! CSV ingestion and train/test splitting (random rows, random groups, or
//! two-means clustering of group centroids).

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{tag, SeedStream};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

/// Reads a headed, comma-separated file. Every column other than the
/// outcome and group columns is a numeric feature, kept in header order.
pub fn load_csv(
    path: impl AsRef<Path>,
    outcome: Option<&str>,
    group: Option<&str>,
) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file, outcome, group)
}

pub fn read_csv<R: Read>(reader: R, outcome: Option<&str>, group: Option<&str>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::ParseError {
            row: 0,
            column: String::new(),
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_owned)
        .collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    let y_col = outcome.map(find).transpose()?;
    let g_col = group.map(find).transpose()?;
    let features: Vec<usize> = (0..header.len())
        .filter(|&c| Some(c) != y_col && Some(c) != g_col)
        .collect();
    if features.is_empty() {
        return Err(Error::InvalidInput("no feature columns".into()));
    }

    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); features.len()];
    let mut y = Vec::new();
    let mut groups = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| Error::ParseError {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        for (k, &c) in features.iter().enumerate() {
            let v = rec[c].parse::<f64>().ok().filter(|v| v.is_finite());
            cols[k].push(
                v.ok_or_else(|| Error::NonNumericFeature(format!("{} (row {row})", header[c])))?,
            );
        }
        if let Some(c) = y_col {
            let v = rec[c].parse::<f64>().map_err(|e| Error::ParseError {
                row,
                column: header[c].clone(),
                message: e.to_string(),
            })?;
            y.push(v);
        }
        if let Some(c) = g_col {
            groups.push(rec[c].to_owned());
        }
    }
    let n = cols[0].len();
    if n == 0 {
        return Err(Error::InvalidInput("no data rows".into()));
    }
    let x = Matrix::from_col_major(n, features.len(), cols.concat())?;
    let names = features.iter().map(|&c| header[c].clone()).collect();
    Dataset::with_names(x, y_col.map(|_| y), g_col.map(|_| groups), names)
}

/// Writes `data` with the group column first and the outcome column last.
/// Values use the shortest representation that parses back bit-exactly.
pub fn write_csv<W: Write>(writer: W, data: &Dataset, outcome: &str, group: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header: Vec<&str> = Vec::new();
    if data.groups().is_some() {
        header.push(group);
    }
    header.extend(data.feature_names().iter().map(String::as_str));
    if data.y().is_some() {
        header.push(outcome);
    }
    w.write_record(&header).map_err(io)?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        if let Some(g) = data.groups() {
            rec.push(g[i].clone());
        }
        rec.extend((0..data.p()).map(|j| data.x()[(i, j)].to_string()));
        if let Some(y) = data.y() {
            rec.push(y[i].to_string());
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(path: impl AsRef<Path>, data: &Dataset, outcome: &str, group: &str) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_csv(std::io::BufWriter::new(file), data, outcome, group)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitScheme {
    #[serde(rename = "random-half")]
    RandomHalf,
    #[serde(rename = "group-half")]
    GroupHalf,
    #[serde(rename = "two-means")]
    TwoMeansGroups,
}

impl std::str::FromStr for SplitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-half" => Ok(SplitScheme::RandomHalf),
            "group-half" => Ok(SplitScheme::GroupHalf),
            "two-means" => Ok(SplitScheme::TwoMeansGroups),
            _ => Err(Error::InvalidInput(format!("unknown split scheme `{s}`"))),
        }
    }
}

fn default_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub scheme: SplitScheme,
    #[serde(default)]
    pub seed: u64,
    /// Share of rows (or groups) sent to training; unused by two-means.
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
}

impl SplitSpec {
    pub fn new(scheme: SplitScheme, seed: u64) -> Self {
        Self {
            scheme,
            seed,
            train_fraction: 0.5,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "train_fraction {} outside (0, 1)",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Train,
    Test,
}

/// Row partition plus, for group schemes, the side each group went to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub spec: SplitSpec,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub group_sides: Option<BTreeMap<String, Side>>,
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub assignment: SplitAssignment,
}

fn rounded_share(fraction: f64, count: usize) -> usize {
    ((fraction * count as f64).round() as usize).clamp(1, count - 1)
}

fn finish(
    data: &Dataset,
    spec: &SplitSpec,
    is_train: impl Fn(usize) -> bool,
    sides: Option<BTreeMap<String, Side>>,
) -> Split {
    let (train_rows, test_rows): (Vec<usize>, Vec<usize>) =
        (0..data.n()).partition(|&i| is_train(i));
    Split {
        train: data.select_rows(&train_rows),
        test: data.select_rows(&test_rows),
        assignment: SplitAssignment {
            spec: spec.clone(),
            train_rows,
            test_rows,
            group_sides: sides,
        },
    }
}

pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<Split> {
    match spec.scheme {
        SplitScheme::RandomHalf => split_random_half(data, spec),
        SplitScheme::GroupHalf => split_by_groups(data, spec),
        SplitScheme::TwoMeansGroups => split_two_means(data, spec),
    }
}

pub fn split_random_half(data: &Dataset, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let n = data.n();
    if n < 2 {
        return Err(Error::InvalidInput(
            "splitting needs at least 2 rows".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut SeedStream::new(spec.seed).child(tag::SPLIT).rng());
    let mut train = vec![false; n];
    order[..rounded_share(spec.train_fraction, n)]
        .iter()
        .for_each(|&i| train[i] = true);
    Ok(finish(data, spec, |i| train[i], None))
}

fn sorted_groups(data: &Dataset) -> Result<(Vec<String>, Vec<usize>)> {
    let groups = data.groups().ok_or(Error::MissingGroups)?;
    let mut labels: Vec<String> = groups.to_vec();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::MissingGroups);
    }
    let index: BTreeMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(k, g)| (g.as_str(), k))
        .collect();
    let of_row = groups.iter().map(|g| index[g.as_str()]).collect();
    Ok((labels, of_row))
}

fn sides_map(labels: &[String], train: &[bool]) -> BTreeMap<String, Side> {
    labels
        .iter()
        .zip(train)
        .map(|(g, &t)| (g.clone(), if t { Side::Train } else { Side::Test }))
        .collect()
}

pub fn split_by_groups(data: &Dataset, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let (labels, of_row) = sorted_groups(data)?;
    let g = labels.len();
    let mut order: Vec<usize> = (0..g).collect();
    order.shuffle(&mut SeedStream::new(spec.seed).child(tag::SPLIT).rng());
    let mut train = vec![false; g];
    order[..rounded_share(spec.train_fraction, g)]
        .iter()
        .for_each(|&k| train[k] = true);
    let sides = sides_map(&labels, &train);
    Ok(finish(data, spec, |i| train[of_row[i]], Some(sides)))
}

pub fn split_two_means(data: &Dataset, spec: &SplitSpec) -> Result<Split> {
    let (labels, of_row) = sorted_groups(data)?;
    let centroids = group_centroids(data.x(), &of_row, labels.len());
    let fit = two_means(&centroids)?;
    // The cluster holding the first group in sorted order is the training side.
    let train: Vec<bool> = fit
        .assignment
        .iter()
        .map(|&c| c == fit.assignment[0])
        .collect();
    let sides = sides_map(&labels, &train);
    Ok(finish(data, spec, |i| train[of_row[i]], Some(sides)))
}

/// Mean feature vector of each group, in group index order.
pub fn group_centroids(x: &Matrix, of_row: &[usize], groups: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; x.ncols()]; groups];
    let mut counts = vec![0usize; groups];
    for (i, &g) in of_row.iter().enumerate() {
        counts[g] += 1;
        for (j, s) in sums[g].iter_mut().enumerate() {
            *s += x[(i, j)];
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|v| *v /= c as f64);
    }
    sums
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoMeans {
    /// Cluster (0 or 1) of each point.
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squares after initialization and after each Lloyd
    /// iteration or transfer.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn cluster_means(points: &[Vec<f64>], assignment: &[usize]) -> [Option<Vec<f64>>; 2] {
    let d = points[0].len();
    let mut out = [None, None];
    for (c, slot) in out.iter_mut().enumerate() {
        let members: Vec<&Vec<f64>> = points
            .iter()
            .zip(assignment)
            .filter(|(_, &a)| a == c)
            .map(|(p, _)| p)
            .collect();
        if !members.is_empty() {
            let k = members.len() as f64;
            *slot = Some(
                (0..d)
                    .map(|j| members.iter().map(|p| p[j]).sum::<f64>() / k)
                    .collect(),
            );
        }
    }
    out
}

/// Within-cluster sum of squared distances to the cluster means.
pub fn within_ss(points: &[Vec<f64>], assignment: &[usize]) -> f64 {
    let means = cluster_means(points, assignment);
    points
        .iter()
        .zip(assignment)
        .map(|(p, &a)| means[a].as_ref().map_or(0.0, |m| dist_sq(p, m)))
        .sum()
}

/// Single point whose move to the other cluster lowers the within-cluster sum
/// of squares the most, if any does. Moving `x` from `A` to `B` changes it by
/// `|B|/(|B|+1)·‖x−μ_B‖² − |A|/(|A|−1)·‖x−μ_A‖²`.
fn best_transfer(points: &[Vec<f64>], assignment: &[usize]) -> Option<usize> {
    let means = cluster_means(points, assignment);
    let (Some(m0), Some(m1)) = (&means[0], &means[1]) else {
        return None;
    };
    let sizes = [
        assignment.iter().filter(|&&a| a == 0).count(),
        assignment.iter().filter(|&&a| a == 1).count(),
    ];
    let centers = [m0, m1];
    let mut best: Option<(usize, f64)> = None;
    for (i, (p, &a)) in points.iter().zip(assignment).enumerate() {
        let (na, nb) = (sizes[a] as f64, sizes[1 - a] as f64);
        if na < 2.0 {
            continue;
        }
        let gain =
            nb / (nb + 1.0) * dist_sq(p, centers[1 - a]) - na / (na - 1.0) * dist_sq(p, centers[a]);
        // Relative slack keeps rounding noise from cycling between equal partitions.
        let scale = dist_sq(p, centers[a]) + dist_sq(p, centers[1 - a]);
        if gain < -1e-12 * scale && best.is_none_or(|(_, g)| gain < g) {
            best = Some((i, gain));
        }
    }
    best.map(|(i, _)| i)
}

/// Lloyd iterations for K = 2 from the farthest pair of points, followed by
/// single-point transfers until none lowers the objective.
pub fn two_means(points: &[Vec<f64>]) -> Result<TwoMeans> {
    let g = points.len();
    if g < 2 {
        return Err(Error::MissingGroups);
    }
    let (mut a, mut b, mut best) = (0, 1, -1.0);
    for i in 0..g {
        for j in i + 1..g {
            let d = dist_sq(&points[i], &points[j]);
            if d > best {
                (a, b, best) = (i, j, d);
            }
        }
    }
    let mut centers = [points[a].clone(), points[b].clone()];
    let assign = |centers: &[Vec<f64>; 2]| -> Vec<usize> {
        points
            .iter()
            .map(|p| usize::from(dist_sq(p, &centers[1]) < dist_sq(p, &centers[0])))
            .collect()
    };
    let mut assignment = assign(&centers);
    let mut trace = vec![within_ss(points, &assignment)];
    let max_iter = 50.max(10 * g);
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let means = cluster_means(points, &assignment);
        for (c, m) in centers.iter_mut().zip(means) {
            if let Some(m) = m {
                *c = m;
            }
        }
        let next = assign(&centers);
        let converged = next == assignment;
        assignment = next;
        trace.push(within_ss(points, &assignment));
        if converged {
            break;
        }
    }
    if assignment.iter().all(|&c| c == assignment[0]) {
        return Err(Error::DegenerateSplit);
    }
    while let Some(i) = best_transfer(points, &assignment) {
        assignment[i] = 1 - assignment[i];
        trace.push(within_ss(points, &assignment));
        iterations += 1;
    }
    Ok(TwoMeans {
        assignment,
        objective_trace: trace,
        iterations,
    })
}
