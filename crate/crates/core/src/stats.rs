//! Deterministic reductions and Monte Carlo estimates.
//!
//! Every sum over paths goes through [`pairwise_sum`], whose recursion splits
//! at fixed indices. The result therefore depends only on the input slice and
//! never on how many worker threads took part.

use rayon::prelude::*;

const LEAF: usize = 1024;
const PAR_THRESHOLD: usize = 1 << 15;

/// Pairwise (tree) summation with a fixed split shape.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = split_point(values.len());
    let (lo, hi) = values.split_at(mid);
    if values.len() >= PAR_THRESHOLD {
        let (a, b) = rayon::join(|| pairwise_sum(lo), || pairwise_sum(hi));
        a + b
    } else {
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

// Largest multiple of LEAF not exceeding half the length, so leaves are full.
fn split_point(len: usize) -> usize {
    let half = len / 2;
    (half / LEAF).max(1) * LEAF
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Unbiased sample variance (two-pass).
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let sq: Vec<f64> = values.par_iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (n - 1) as f64
}

/// Unbiased sample covariance of two equally long samples.
pub fn sample_covariance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let (ma, mb) = (mean(a), mean(b));
    let prod: Vec<f64> = a
        .par_iter()
        .zip(b.par_iter())
        .map(|(x, y)| (x - ma) * (y - mb))
        .collect();
    pairwise_sum(&prod) / (n - 1) as f64
}

/// Averages consecutive antithetic pairs `(2i, 2i+1)`.
pub fn fold_pairs(values: &[f64]) -> Vec<f64> {
    debug_assert!(values.len() % 2 == 0);
    values
        .par_chunks_exact(2)
        .map(|p| 0.5 * (p[0] + p[1]))
        .collect()
}

/// A Monte Carlo estimate with its standard error and 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub ci95: (f64, f64),
}

impl McEstimate {
    pub fn new(value: f64, std_error: f64, n_paths: usize) -> Self {
        Self {
            value,
            std_error,
            n_paths,
            ci95: (value - 1.96 * std_error, value + 1.96 * std_error),
        }
    }

    /// Estimate from per-path samples. With `antithetic` the samples are
    /// folded into pair averages before the variance is taken, since the two
    /// halves of a pair are not independent.
    pub fn from_samples(samples: &[f64], antithetic: bool) -> Self {
        let n_paths = samples.len();
        let folded;
        let units: &[f64] = if antithetic {
            folded = fold_pairs(samples);
            &folded
        } else {
            samples
        };
        let value = mean(units);
        let std_error = (sample_variance(units) / units.len() as f64).sqrt();
        Self::new(value, std_error, n_paths)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci95.0 <= x && x <= self.ci95.1
    }

    /// Whether two independent-ish estimates agree within `z` joint standard errors.
    pub fn agrees_with(&self, other: &McEstimate, z: f64) -> bool {
        let joint = (self.std_error.powi(2) + other.std_error.powi(2)).sqrt();
        (self.value - other.value).abs() <= z * joint
    }
}
