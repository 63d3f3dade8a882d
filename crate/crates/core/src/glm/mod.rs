//! Logistic-regression machinery.
//!
//! * [`fit_logistic`]: unpenalized maximum likelihood (the naive method when
//!   fed surrogate labels).
//! * [`fit_lasso`] / [`cv_select_lambda`]: L1-penalized fit by coordinate
//!   descent and its cross-validated penalty choice.
//! * [`threshold_support`] and [`fit_joint`]: the remaining two steps of
//!   LassoJoint, chained together by [`lasso_joint`].

mod cv;
mod joint;
mod lasso;
mod linalg;
mod logistic;

pub use cv::{cv_select_lambda, fit_path, lambda_grid, stratified_folds, CvConfig, LambdaSelection};
pub use joint::{fit_joint, joint_log_likelihood, JointConfig, JointModel, C_FLOOR};
pub use lasso::{fit_lasso, kkt_residual, lambda_max, LassoConfig, LassoFit, LassoProblem};
pub use logistic::{fit_logistic, LogisticConfig, LogisticFit};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Logistic function `exp(t) / (1 + exp(t))`, evaluated without overflow.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(t))`, stable for large `|t|`.
pub fn softplus(t: f64) -> f64 {
    if t == f64::NEG_INFINITY {
        return 0.0;
    }
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Intercept plus per-feature weights of a logistic model.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub intercept: f64,
    pub beta: Vec<f64>,
    /// Penalty the fit was produced at, if any.
    pub lambda: Option<f64>,
}

impl Coefficients {
    pub fn zeros(p: usize) -> Self {
        Self {
            intercept: 0.0,
            beta: vec![0.0; p],
            lambda: None,
        }
    }

    pub fn n_features(&self) -> usize {
        self.beta.len()
    }

    /// Indices of the nonzero weights, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.beta
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn l1_norm(&self) -> f64 {
        self.beta.iter().map(|b| b.abs()).sum()
    }

    pub fn linear_predictor(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.beta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.beta.len(),
                got: x.ncols(),
            });
        }
        let mut eta = vec![self.intercept; x.nrows()];
        for (j, &b) in self.beta.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            for (e, v) in eta.iter_mut().zip(x.column(j).iter()) {
                *e += b * v;
            }
        }
        Ok(eta)
    }

    /// Embed coefficients fitted on the columns `support` into a model of arity `p`.
    pub fn expand(&self, support: &[usize], p: usize) -> Coefficients {
        let mut beta = vec![0.0; p];
        for (&j, &b) in support.iter().zip(&self.beta) {
            beta[j] = b;
        }
        Coefficients {
            intercept: self.intercept,
            beta,
            lambda: self.lambda,
        }
    }
}

/// Anything that yields a posterior `P(Y = 1 | x) = sigmoid(x'beta)`.
pub trait PosteriorModel {
    fn coefficients(&self) -> &Coefficients;
}

impl PosteriorModel for Coefficients {
    fn coefficients(&self) -> &Coefficients {
        self
    }
}

impl PosteriorModel for JointModel {
    // The label frequency only scales P(S = 1 | x); the posterior of Y ignores it.
    fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }
}

pub fn predict_posterior(model: &impl PosteriorModel, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(model
        .coefficients()
        .linear_predictor(x)?
        .into_iter()
        .map(sigmoid)
        .collect())
}

/// Mean negative log-likelihood of binary `labels` under `coef`.
pub fn empirical_risk(x: &DMatrix<f64>, labels: &[u8], coef: &Coefficients) -> Result<f64> {
    let eta = coef.linear_predictor(x)?;
    Ok(risk_from_eta(&eta, labels))
}

pub(crate) fn risk_from_eta(eta: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = eta
        .iter()
        .zip(labels)
        .map(|(&e, &l)| if l == 1 { softplus(-e) } else { softplus(e) })
        .sum();
    total / eta.len() as f64
}

/// Gradient of [`empirical_risk`]; entry 0 is the intercept.
pub fn risk_gradient(x: &DMatrix<f64>, labels: &[u8], coef: &Coefficients) -> Result<Vec<f64>> {
    let eta = coef.linear_predictor(x)?;
    let n = eta.len() as f64;
    let resid: Vec<f64> = eta
        .iter()
        .zip(labels)
        .map(|(&e, &l)| sigmoid(e) - l as f64)
        .collect();
    let mut grad = Vec::with_capacity(x.ncols() + 1);
    grad.push(resid.iter().sum::<f64>() / n);
    for col in x.column_iter() {
        grad.push(col.iter().zip(&resid).map(|(v, r)| v * r).sum::<f64>() / n);
    }
    Ok(grad)
}

/// Indices whose weights survive hard thresholding at `delta`.
pub fn threshold_support(coef: &Coefficients, delta: f64) -> Vec<usize> {
    coef.beta
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0 && b.abs() >= delta)
        .map(|(j, _)| j)
        .collect()
}

pub(crate) fn validate_xy(x: &DMatrix<f64>, labels: &[u8]) -> Result<()> {
    if labels.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: labels.len(),
        });
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidParameter(format!("label {bad} is not binary")));
    }
    for (col_idx, col) in x.column_iter().enumerate() {
        if let Some(row) = col.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, col: col_idx });
        }
    }
    Ok(())
}

pub(crate) fn require_two_classes(labels: &[u8]) -> Result<usize> {
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    if labels.len() < 2 || n_pos == 0 || n_pos == labels.len() {
        return Err(Error::SingleClass);
    }
    Ok(n_pos)
}

/// Settings of the full LassoJoint chain.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoJointConfig {
    pub cv: CvConfig,
    /// Threshold as a multiple of the selected penalty.
    pub delta_ratio: f64,
    pub joint: JointConfig,
}

impl Default for LassoJointConfig {
    fn default() -> Self {
        Self {
            cv: CvConfig::default(),
            delta_ratio: 0.5,
            joint: JointConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LassoJointFit {
    pub selection: LambdaSelection,
    pub lasso: Coefficients,
    pub delta: f64,
    /// Thresholded-Lasso support the joint model was fitted on.
    pub support: Vec<usize>,
    /// Joint model with coefficients expanded to the full feature arity.
    pub model: JointModel,
}

/// Lasso at the CV-selected penalty, thresholded support, then the joint
/// `(beta, c)` fit restricted to that support.
pub fn lasso_joint(
    x: &DMatrix<f64>,
    s: &[u8],
    cfg: &LassoJointConfig,
    seed: u64,
) -> Result<LassoJointFit> {
    let selection = cv_select_lambda(x, s, &cfg.cv, seed)?;
    let lasso = fit_lasso(x, s, selection.lambda_min, &cfg.cv.lasso)?.coefficients;
    let delta = cfg.delta_ratio * selection.lambda_min;
    let support = threshold_support(&lasso, delta);
    let restricted = x.select_columns(&support);
    let mut model = fit_joint(&restricted, s, &cfg.joint)?;
    model.coefficients = model.coefficients.expand(&support, x.ncols());
    model.coefficients.lambda = Some(selection.lambda_min);
    Ok(LassoJointFit {
        selection,
        lasso,
        delta,
        support,
        model,
    })
}
