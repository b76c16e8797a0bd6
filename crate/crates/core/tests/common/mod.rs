#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;
use shifterr_core::linalg::Matrix;
use shifterr_core::models::sigmoid;
use shifterr_core::rng::SeedStream;
use shifterr_core::Dataset;

pub fn gaussian_matrix(seed: u64, n: usize, p: usize, sd: f64) -> Matrix {
    let mut rng = SeedStream::new(seed).rng();
    Matrix::from_fn(n, p, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
}

/// `k` leading coefficients equal to `strength`, the rest zero.
pub fn sparse_theta(p: usize, k: usize, strength: f64) -> Vec<f64> {
    (0..p).map(|j| if j < k { strength } else { 0.0 }).collect()
}

pub fn linear_outcomes(x: &Matrix, theta: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = SeedStream::new(seed).child(7).rng();
    x.mul_vec(theta)
        .into_iter()
        .map(|m| m + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

pub fn logistic_outcomes(x: &Matrix, theta: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = SeedStream::new(seed).child(8).rng();
    x.mul_vec(theta)
        .into_iter()
        .map(|t| f64::from(rng.random::<f64>() < sigmoid(t)))
        .collect()
}

pub fn labeled(x: &Matrix, y: Vec<f64>) -> Dataset {
    Dataset::new(x.clone(), Some(y), None).unwrap()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn std_err(v: &[f64]) -> f64 {
    let m = mean(v);
    let var = v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (v.len() - 1) as f64;
    (var / v.len() as f64).sqrt()
}
