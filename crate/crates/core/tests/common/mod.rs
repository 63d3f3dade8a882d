//! Independent reference implementations and fixtures shared by the test targets.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use puclust::data::{generate_artif, load_csv, preprocess, ArtifConfig, Dataset, PreprocessConfig};
use puclust::glm::Coefficients;
use puclust::seed;

pub fn data_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(file)
}

pub fn breastc() -> Dataset {
    preprocess(&load_csv(data_path("breastc.csv"), "class").unwrap(), &PreprocessConfig::default()).unwrap()
}

pub fn wdbc() -> Dataset {
    preprocess(&load_csv(data_path("wdbc.csv"), "diagnosis").unwrap(), &PreprocessConfig::default()).unwrap()
}

pub fn artif(seed_: u64) -> Dataset {
    let raw = generate_artif(&ArtifConfig::default(), seed_).unwrap().into_raw("y");
    preprocess(&raw, &PreprocessConfig::default()).unwrap()
}

/// Naive textbook logistic log-likelihood (no shared helpers).
pub fn logistic_loglik(xs: &[f64], ys: &[u8], b0: f64, b1: f64) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let p = 1.0 / (1.0 + (-(b0 + b1 * x)).exp());
            if y == 1 {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum()
}

/// Best log-likelihood over the grid `[-5, 5]^2` with step 0.01.
pub fn grid_search_loglik(xs: &[f64], ys: &[u8]) -> f64 {
    let steps = 1001;
    let mut best = f64::NEG_INFINITY;
    for a in 0..steps {
        let b0 = -5.0 + 0.01 * a as f64;
        for b in 0..steps {
            let b1 = -5.0 + 0.01 * b as f64;
            best = best.max(logistic_loglik(xs, ys, b0, b1));
        }
    }
    best
}

/// One-feature logistic sample whose maximum-likelihood estimate sits well inside `[-5, 5]^2`.
pub fn small_logistic_instance(seed_: u64, n: usize) -> (Vec<f64>, Vec<u8>) {
    let mut rng = seed::rng(seed_);
    let b0: f64 = rng.random_range(-1.0..1.0);
    let b1: f64 = rng.random_range(-1.5..1.5);
    let xs: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let ys = xs
        .iter()
        .map(|&x| u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-(b0 + b1 * x)).exp())))
        .collect();
    (xs, ys)
}

/// Minimum within-cluster SSE over all nonempty 2-partitions (m <= ~16).
pub fn brute_force_two_partition(points: &[Vec<f64>]) -> f64 {
    let m = points.len();
    let sse_of = |members: &[&Vec<f64>]| -> f64 {
        let d = members[0].len();
        let k = members.len() as f64;
        let mut total = 0.0;
        for j in 0..d {
            let mean = members.iter().map(|p| p[j]).sum::<f64>() / k;
            total += members.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>();
        }
        total
    };
    let mut best = f64::INFINITY;
    // fix point 0 in the first block to skip mirrored partitions
    for mask in 0u32..(1 << (m - 1)) {
        let full = mask << 1;
        let a: Vec<&Vec<f64>> = (0..m).filter(|&i| full & (1 << i) == 0).map(|i| &points[i]).collect();
        let b: Vec<&Vec<f64>> = (0..m).filter(|&i| full & (1 << i) != 0).map(|i| &points[i]).collect();
        if b.is_empty() {
            continue;
        }
        best = best.min(sse_of(&a) + sse_of(&b));
    }
    best
}

pub fn to_matrix(points: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), points[0].len(), |i, j| points[i][j])
}

/// O(n^2) Mann-Whitney count with ties worth one half.
pub fn pair_count_auc(y: &[u8], s: &[f64]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] == 1 && y[j] == 0 {
                pairs += 1.0;
                if s[i] > s[j] {
                    wins += 1.0;
                } else if s[i] == s[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Gaussian features with labels drawn from a logistic model.
pub fn logistic_data(seed_: u64, n: usize, intercept: f64, beta: &[f64]) -> (DMatrix<f64>, Vec<u8>) {
    let mut rng = seed::rng(seed_);
    let x = DMatrix::from_fn(n, beta.len(), |_, _| StandardNormal.sample(&mut rng));
    let y = (0..n)
        .map(|i| {
            let eta = intercept + (0..beta.len()).map(|j| beta[j] * x[(i, j)]).sum::<f64>();
            u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp()))
        })
        .collect();
    (x, y)
}

/// Keep each positive labeled with probability `c`.
pub fn scar_thin(y: &[u8], c: f64, seed_: u64) -> Vec<u8> {
    let mut rng = seed::rng(seed_);
    y.iter().map(|&v| u8::from(v == 1 && rng.random::<f64>() < c)).collect()
}

/// Subgradient conditions on the standardized scale, computed from scratch.
pub fn kkt_violation(x: &DMatrix<f64>, y: &[u8], coef: &Coefficients, lambda: f64) -> f64 {
    let n = x.nrows() as f64;
    let eta: Vec<f64> = (0..x.nrows())
        .map(|i| coef.intercept + (0..x.ncols()).map(|j| coef.beta[j] * x[(i, j)]).sum::<f64>())
        .collect();
    let mut worst: f64 = 0.0;
    for j in 0..x.ncols() {
        let col = x.column(j);
        let mean = col.sum() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if sd == 0.0 {
            continue;
        }
        let g: f64 = (0..x.nrows())
            .map(|i| (x[(i, j)] - mean) / sd * (y[i] as f64 - 1.0 / (1.0 + (-eta[i]).exp())))
            .sum::<f64>()
            / n;
        let v = if coef.beta[j] == 0.0 {
            (g.abs() - lambda).max(0.0)
        } else {
            (g - lambda * coef.beta[j].signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}
