//! Joint maximum likelihood for `P(S = 1 | x) = c * sigmoid(x'beta)`.
//!
//! Under SCAR the observed label is a thinned version of the true label, so
//! the surrogate likelihood involves both the posterior coefficients and the
//! label frequency `c`. The fit alternates a Fisher-scoring step in `beta` at
//! fixed `c` with an exact one-dimensional maximization in `c` at fixed `beta`.

use nalgebra::DMatrix;

use super::linalg::{design_transpose_times, solve_spd, weighted_gram};
use super::logistic::{fit_logistic, LogisticConfig};
use super::{sigmoid, softplus, validate_xy, Coefficients};
use crate::error::{Error, Result};

/// Lower edge of the label-frequency box `(C_FLOOR, 1]`.
pub const C_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct JointConfig {
    /// Outer alternations.
    pub max_iter: usize,
    /// Stop once an alternation raises the log-likelihood by less than this.
    pub tol: f64,
    /// Scoring steps per beta-update.
    pub beta_steps: usize,
    /// Starting values of `c`; the best final likelihood wins.
    pub c_starts: Vec<f64>,
    /// Hold `c` at this value instead of estimating it.
    pub fixed_c: Option<f64>,
    /// Stop once the coefficient norm exceeds this: the likelihood has no
    /// finite maximizer and keeps creeping up along a separating direction.
    pub separation_norm: f64,
}

impl Default for JointConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-9,
            beta_steps: 5,
            c_starts: vec![0.3, 0.6, 1.0],
            fixed_c: None,
            separation_norm: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointModel {
    pub coefficients: Coefficients,
    pub c_hat: f64,
    /// Summed observed-data log-likelihood at the returned point.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub separated: bool,
    /// Log-likelihood after every alternation of the winning start.
    pub trace: Vec<f64>,
}

impl JointModel {
    pub fn new(coefficients: Coefficients, c_hat: f64) -> Self {
        Self {
            coefficients,
            c_hat,
            log_likelihood: f64::NAN,
            iterations: 0,
            converged: true,
            separated: false,
            trace: Vec::new(),
        }
    }
}

/// `ln(1 - c)`, with `c = 1` mapped to negative infinity.
fn log1m(c: f64) -> f64 {
    if c >= 1.0 {
        f64::NEG_INFINITY
    } else {
        (-c).ln_1p()
    }
}

fn loglik_eta(eta: &[f64], s: &[u8], c: f64) -> f64 {
    let (lc, l1mc) = (c.ln(), log1m(c));
    eta.iter()
        .zip(s)
        .map(|(&e, &si)| {
            if si == 1 {
                lc - softplus(-e)
            } else {
                // ln(1 - c*sigmoid(e)) = softplus(e + ln(1-c)) - softplus(e)
                softplus(e + l1mc) - softplus(e)
            }
        })
        .sum()
}

pub fn joint_log_likelihood(x: &DMatrix<f64>, s: &[u8], coef: &Coefficients, c: f64) -> Result<f64> {
    Ok(loglik_eta(&coef.linear_predictor(x)?, s, c))
}

/// Exact maximizer of the (concave) log-likelihood in `c` for fixed linear predictors.
fn best_c(eta: &[f64], s: &[u8]) -> f64 {
    let n_lab = s.iter().filter(|&&v| v == 1).count() as f64;
    let probs: Vec<f64> = eta
        .iter()
        .zip(s)
        .filter(|(_, &si)| si == 0)
        .map(|(&e, _)| sigmoid(e))
        .collect();
    // derivative: n_lab / c - sum_{s=0} p / (1 - c p), decreasing in c
    let slope = |c: f64| n_lab / c - probs.iter().map(|&p| p / (1.0 - c * p)).sum::<f64>();
    if slope(1.0) >= 0.0 {
        return 1.0;
    }
    if slope(C_FLOOR) <= 0.0 {
        return C_FLOOR;
    }
    let (mut lo, mut hi) = (C_FLOOR, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Fisher-scoring ascent in `beta` at fixed `c`; never lowers the likelihood.
fn beta_step(x: &DMatrix<f64>, s: &[u8], coef: &mut Coefficients, c: f64, steps: usize) -> Result<f64> {
    let n = s.len() as f64;
    let l1mc = log1m(c);
    let mut eta = coef.linear_predictor(x)?;
    let mut ll = loglik_eta(&eta, s, c);
    for _ in 0..steps {
        let mut score = Vec::with_capacity(s.len());
        let mut info = Vec::with_capacity(s.len());
        for (&e, &si) in eta.iter().zip(s) {
            let p = sigmoid(e);
            let thinned = sigmoid(e + l1mc);
            score.push(if si == 1 { 1.0 - p } else { thinned - p });
            // c p (1-p)^2 / (1 - c p), with (1-p)/(1-cp) = 1 - sigmoid(e + ln(1-c))
            info.push((c * p * (1.0 - p) * (1.0 - thinned)).max(1e-12));
        }
        let grad = design_transpose_times(x, &score) / n;
        let fisher = weighted_gram(x, &info) / n;
        let dir = solve_spd(&fisher, &grad);

        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let trial = Coefficients {
                intercept: coef.intercept + t * dir[0],
                beta: coef.beta.iter().enumerate().map(|(j, b)| b + t * dir[j + 1]).collect(),
                lambda: None,
            };
            let trial_eta = trial.linear_predictor(x)?;
            let trial_ll = loglik_eta(&trial_eta, s, c);
            if trial_ll >= ll {
                moved = trial_ll > ll;
                *coef = trial;
                eta = trial_eta;
                ll = trial_ll;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(ll)
}

fn alternate(
    x: &DMatrix<f64>,
    s: &[u8],
    mut coef: Coefficients,
    mut c: f64,
    cfg: &JointConfig,
) -> Result<JointModel> {
    let mut ll = joint_log_likelihood(x, s, &coef, c)?;
    let mut trace = vec![ll];
    let mut converged = false;
    let mut separated = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let after_beta = beta_step(x, s, &mut coef, c, cfg.beta_steps)?;
        let after_c = match cfg.fixed_c {
            Some(_) => after_beta,
            None => {
                let eta = coef.linear_predictor(x)?;
                let candidate = best_c(&eta, s);
                let cand_ll = loglik_eta(&eta, s, candidate);
                if cand_ll >= after_beta {
                    c = candidate;
                    cand_ll
                } else {
                    after_beta
                }
            }
        };
        debug_assert!(after_c >= ll - 1e-9 * ll.abs().max(1.0));
        let gain = after_c - ll;
        ll = after_c;
        trace.push(ll);
        let norm = coef.beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        if norm > cfg.separation_norm || coef.intercept.abs() > cfg.separation_norm {
            separated = true;
            break;
        }
        if gain < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(JointModel {
        coefficients: coef,
        c_hat: c,
        log_likelihood: ll,
        iterations,
        converged,
        separated,
        trace,
    })
}

/// Maximize `sum_i s_i ln(c p_i) + (1 - s_i) ln(1 - c p_i)`, `p_i = sigmoid(x_i'beta)`,
/// over `beta` and `c` in `(C_FLOOR, 1]`.
///
/// `x` may have zero columns (intercept-only model).
pub fn fit_joint(x: &DMatrix<f64>, s: &[u8], cfg: &JointConfig) -> Result<JointModel> {
    validate_xy(x, s)?;
    let n_lab = s.iter().filter(|&&v| v == 1).count();
    if n_lab == 0 {
        return Err(Error::NoLabeled);
    }
    if n_lab == s.len() {
        return Err(Error::SingleClass);
    }
    if let Some(c) = cfg.fixed_c {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidParameter(format!("fixed c must lie in (0, 1], got {c}")));
        }
    }

    // Naive fit of S on x, shifted so the starting posterior roughly matches each c.
    let naive = fit_logistic(x, s, &LogisticConfig::default())?.coefficients;
    let starts: Vec<f64> = match cfg.fixed_c {
        Some(c) => vec![c],
        None => cfg.c_starts.iter().map(|c| c.clamp(C_FLOOR, 1.0)).collect(),
    };
    let mut best: Option<JointModel> = None;
    for c0 in starts {
        let mut init = naive.clone();
        init.intercept -= c0.ln();
        let fit = alternate(x, s, init, c0, cfg)?;
        if best.as_ref().is_none_or(|b| fit.log_likelihood > b.log_likelihood) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one start"))
}
