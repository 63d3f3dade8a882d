use log::warn;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use super::lasso::{LassoConfig, LassoProblem};
use super::{require_two_classes, softplus, validate_xy, Coefficients};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub n_folds: usize,
    pub grid_size: usize,
    /// Smallest grid penalty as a fraction of `lambda_max`.
    pub min_ratio: f64,
    /// The path stops once this fraction of the null deviance is explained...
    pub dev_ratio_max: f64,
    /// ...or once a step improves the explained fraction by less than this (relative).
    pub dev_ratio_tol: f64,
    /// Grid points always fitted before early stopping may kick in.
    pub min_path: usize,
    pub lasso: LassoConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            n_folds: 10,
            grid_size: 100,
            min_ratio: 1e-4,
            dev_ratio_max: 0.999,
            dev_ratio_tol: 1e-5,
            min_path: 5,
            lasso: LassoConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSelection {
    /// Strictly descending penalties, truncated where the full-data path stopped.
    pub lambda_grid: Vec<f64>,
    /// Mean held-out deviance per grid point.
    pub cv_mean_loss: Vec<f64>,
    pub lambda_min: f64,
    /// Folds actually used (may be fewer than requested for a rare class).
    pub n_folds: usize,
}

/// Log-spaced grid from `lambda_max` down to `lambda_max * min_ratio`.
pub fn lambda_grid(lambda_max: f64, grid_size: usize, min_ratio: f64) -> Vec<f64> {
    if grid_size == 1 {
        return vec![lambda_max];
    }
    let (hi, lo) = (lambda_max.ln(), (lambda_max * min_ratio).ln());
    (0..grid_size)
        .map(|k| (hi + (lo - hi) * k as f64 / (grid_size - 1) as f64).exp())
        .collect()
}

/// Fold index per row; each class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[u8], n_folds: usize, seed_: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed_);
    let mut fold = vec![0; labels.len()];
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            fold[i] = k % n_folds;
        }
    }
    fold
}

/// Warm-started fits along `grid`, stopping early once the explained deviance
/// saturates or stops improving.
pub fn fit_path(problem: &LassoProblem, grid: &[f64], cfg: &CvConfig) -> Vec<Coefficients> {
    let mut state = problem.null_state();
    let mut prev_ratio = 0.0;
    let mut path = Vec::with_capacity(grid.len());
    for (g, &lam) in grid.iter().enumerate() {
        let (fit, next) = problem.fit(lam, Some(&state), &cfg.lasso);
        state = next;
        path.push(fit.coefficients);
        let ratio = problem.deviance_ratio(&state);
        if g + 1 >= cfg.min_path && (ratio >= cfg.dev_ratio_max || ratio - prev_ratio < cfg.dev_ratio_tol * ratio) {
            break;
        }
        prev_ratio = ratio;
    }
    path
}

fn mean_deviance(eta: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = eta
        .iter()
        .zip(labels)
        .map(|(&e, &l)| if l == 1 { softplus(-e) } else { softplus(e) })
        .sum();
    2.0 * total / eta.len() as f64
}

/// K-fold cross-validated choice of the Lasso penalty (minimum mean held-out deviance).
pub fn cv_select_lambda(
    x: &DMatrix<f64>,
    labels: &[u8],
    cfg: &CvConfig,
    seed_: u64,
) -> Result<LambdaSelection> {
    validate_xy(x, labels)?;
    let n_pos = require_two_classes(labels)?;
    if cfg.grid_size == 0 || !(cfg.min_ratio > 0.0 && cfg.min_ratio < 1.0) {
        return Err(Error::InvalidParameter("bad lambda grid settings".into()));
    }
    if cfg.n_folds < 2 || labels.len() < cfg.n_folds {
        return Err(Error::InvalidParameter(format!(
            "need 2 <= n_folds <= n, got n_folds = {} with n = {}",
            cfg.n_folds,
            labels.len()
        )));
    }
    let minority = n_pos.min(labels.len() - n_pos);
    let mut n_folds = cfg.n_folds;
    if minority < n_folds {
        if minority < 2 {
            return Err(Error::InvalidParameter(
                "cross-validation needs at least two examples of each class".into(),
            ));
        }
        warn!("only {minority} examples of the rarer class; using {minority} folds instead of {n_folds}");
        n_folds = minority;
    }

    let full = LassoProblem::new(x, labels)?;
    let lmax = full.lambda_max();
    if !(lmax > 0.0) {
        return Err(Error::InvalidParameter(
            "no feature is correlated with the labels; lambda grid is empty".into(),
        ));
    }
    let mut grid = lambda_grid(lmax, cfg.grid_size, cfg.min_ratio);
    grid.truncate(fit_path(&full, &grid, cfg).len());
    let folds = stratified_folds(labels, n_folds, seed_);

    let mut loss_sum = vec![0.0; grid.len()];
    for k in 0..n_folds {
        let train: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] != k).collect();
        let test: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] == k).collect();
        let x_train = x.select_rows(&train);
        let y_train: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
        let x_test = x.select_rows(&test);
        let y_test: Vec<u8> = test.iter().map(|&i| labels[i]).collect();

        let problem = LassoProblem::new(&x_train, &y_train)?;
        let path = fit_path(&problem, &grid, cfg);
        // A fold that stopped early keeps its last model for the smaller penalties.
        let mut loss = 0.0;
        for g in 0..grid.len() {
            if g < path.len() {
                loss = mean_deviance(&path[g].linear_predictor(&x_test)?, &y_test);
            }
            loss_sum[g] += loss;
        }
    }
    let cv_mean_loss: Vec<f64> = loss_sum.iter().map(|s| s / n_folds as f64).collect();

    // Strict improvement only, so ties resolve to the larger penalty.
    let mut best = 0;
    for (g, &loss) in cv_mean_loss.iter().enumerate() {
        if loss < cv_mean_loss[best] {
            best = g;
        }
    }

    Ok(LambdaSelection {
        lambda_min: grid[best],
        lambda_grid: grid,
        cv_mean_loss,
        n_folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::{fit_lasso, sigmoid};
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn grid_is_strictly_descending() {
        let g = lambda_grid(0.3, 100, 1e-4);
        assert_eq!(g.len(), 100);
        assert!((g[0] - 0.3).abs() < 1e-15);
        assert!((g[99] - 0.3e-4).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<u8> = (0..53).map(|i| u8::from(i % 3 == 0)).collect();
        let folds = stratified_folds(&labels, 10, 9);
        for k in 0..10 {
            let pos = (0..53).filter(|&i| folds[i] == k && labels[i] == 1).count();
            assert!((1..=2).contains(&pos), "fold {k} has {pos} positives");
        }
    }

    #[test]
    fn strong_feature_is_selected() {
        let mut rng = seed::rng(17);
        let n = 2000;
        let x = DMatrix::from_fn(n, 4, |_, _| StandardNormal.sample(&mut rng));
        let y: Vec<u8> = (0..n)
            .map(|i| u8::from(rng.random::<f64>() < sigmoid(1.5 * x[(i, 2)])))
            .collect();
        let sel = cv_select_lambda(&x, &y, &CvConfig::default(), 1).unwrap();
        assert_eq!(sel.lambda_grid.len(), sel.cv_mean_loss.len());
        let fit = fit_lasso(&x, &y, sel.lambda_min, &LassoConfig::default()).unwrap();
        assert!(fit.coefficients.support().contains(&2));
        let best = sel
            .cv_mean_loss
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let at_min = sel.cv_mean_loss[sel.lambda_grid.iter().position(|&l| l == sel.lambda_min).unwrap()];
        assert_eq!(best, at_min);
    }

    #[test]
    fn rare_class_reduces_folds() {
        let mut rng = seed::rng(2);
        let n = 60;
        let x = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>());
        let mut y = vec![0u8; n];
        for i in [3, 10, 20, 40] {
            y[i] = 1;
        }
        let cfg = CvConfig {
            grid_size: 10,
            ..Default::default()
        };
        let sel = cv_select_lambda(&x, &y, &cfg, 3).unwrap();
        assert_eq!(sel.n_folds, 4);
    }
}
