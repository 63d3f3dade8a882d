use nalgebra::DMatrix;

use super::linalg::{design_transpose_times, solve_spd, weighted_gram};
use super::{require_two_classes, risk_from_eta, sigmoid, validate_xy, Coefficients};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticConfig {
    pub max_iter: usize,
    pub tol: f64,
    /// Coefficient norm beyond which the data are treated as separable.
    pub separation_norm: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-8,
            separation_norm: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub coefficients: Coefficients,
    /// Final mean negative log-likelihood.
    pub risk: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The coefficient norm blew past `separation_norm`; the iterate is returned as-is.
    pub separated: bool,
}

/// Unpenalized logistic regression by Newton's method (IRLS) with step halving.
pub fn fit_logistic(x: &DMatrix<f64>, labels: &[u8], cfg: &LogisticConfig) -> Result<LogisticFit> {
    validate_xy(x, labels)?;
    let n_pos = require_two_classes(labels)?;
    let n = labels.len() as f64;
    let p = x.ncols();

    let mean = n_pos as f64 / n;
    let mut coef = Coefficients {
        intercept: (mean / (1.0 - mean)).ln(),
        beta: vec![0.0; p],
        lambda: None,
    };
    let mut eta = coef.linear_predictor(x)?;
    let mut risk = risk_from_eta(&eta, labels);
    let mut converged = false;
    let mut separated = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        let probs: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let w: Vec<f64> = probs.iter().map(|&q| (q * (1.0 - q)).max(1e-12)).collect();
        let resid: Vec<f64> = probs
            .iter()
            .zip(labels)
            .map(|(&q, &l)| q - l as f64)
            .collect();
        let grad = design_transpose_times(x, &resid) / n;
        let hess = weighted_gram(x, &w) / n;
        let step = solve_spd(&hess, &grad);
        let decrement = grad.dot(&step);

        // Backtracking on the risk; Newton steps on logistic loss rarely need it
        // except near separation.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = Coefficients {
                intercept: coef.intercept - t * step[0],
                beta: coef
                    .beta
                    .iter()
                    .enumerate()
                    .map(|(j, b)| b - t * step[j + 1])
                    .collect(),
                lambda: None,
            };
            let trial_eta = trial.linear_predictor(x)?;
            let trial_risk = risk_from_eta(&trial_eta, labels);
            if trial_risk <= risk - 1e-4 * t * decrement || trial_risk <= risk {
                accepted = Some((trial, trial_eta, trial_risk));
                break;
            }
            t *= 0.5;
        }
        let Some((next, next_eta, next_risk)) = accepted else {
            // No decrease available at machine precision.
            converged = true;
            break;
        };
        let max_step = step.iter().fold(0.0f64, |m, v| m.max(v.abs())) * t;
        coef = next;
        eta = next_eta;
        risk = next_risk;

        let norm = coef.beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        if norm > cfg.separation_norm || coef.intercept.abs() > cfg.separation_norm {
            separated = true;
            break;
        }
        if decrement.abs() < cfg.tol * cfg.tol || max_step < cfg.tol {
            converged = true;
            break;
        }
    }

    // Every label reproduced with near-certainty only happens under separation.
    if !separated
        && eta
            .iter()
            .zip(labels)
            .all(|(&e, &l)| (sigmoid(e) - l as f64).abs() < 1e-6)
    {
        separated = true;
    }

    Ok(LogisticFit {
        coefficients: coef,
        risk,
        iterations,
        converged,
        separated,
    })
}
