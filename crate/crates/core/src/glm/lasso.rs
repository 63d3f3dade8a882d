//! L1-penalized logistic regression by proximal Newton with coordinate descent.
//!
//! Features are standardized to mean 0 and (population) variance 1 before
//! fitting, the penalty applies on that scale, and coefficients are mapped back
//! to the original feature scale on output. The objective minimized is
//!
//! ```text
//! R(b0, g) + lambda * sum_j |g_j|,   R = mean negative log-likelihood
//! ```
//!
//! Each outer iteration builds the quadratic model of `R` at the current point,
//! minimizes model + penalty by cyclic coordinate descent (with an active-set
//! inner loop), then backtracks along the resulting direction until the true
//! penalized objective does not increase.

use nalgebra::DMatrix;

use super::{require_two_classes, sigmoid, validate_xy, Coefficients};
use crate::error::{Error, Result};

/// Floor on IRLS weights; keeps the quadratic model usable when fitted
/// probabilities saturate.
const MIN_WEIGHT: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoConfig {
    /// Outer (Newton) iterations.
    pub max_iter: usize,
    /// Convergence threshold on the largest standardized coefficient change.
    pub tol: f64,
    /// Coordinate-descent sweeps allowed per outer iteration.
    pub max_sweeps: usize,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-7,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coefficients: Coefficients,
    /// Penalized objective after every accepted outer step, starting point first.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterate on the standardized scale; reused as a warm start along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoState {
    pub intercept: f64,
    pub gamma: Vec<f64>,
}

/// Standardized copy of a design plus labels, shared across many penalties.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    z: DMatrix<f64>,
    means: Vec<f64>,
    /// Population standard deviations; 0 marks a constant (never-selected) column.
    sds: Vec<f64>,
    y: Vec<f64>,
}

fn soft_threshold(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        0.0
    }
}

impl LassoProblem {
    pub fn new(x: &DMatrix<f64>, labels: &[u8]) -> Result<Self> {
        validate_xy(x, labels)?;
        require_two_classes(labels)?;
        let n = x.nrows() as f64;
        let mut z = x.clone();
        let mut means = Vec::with_capacity(x.ncols());
        let mut sds = Vec::with_capacity(x.ncols());
        for mut col in z.column_iter_mut() {
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd > 1e-12 * (1.0 + m.abs()) {
                col.iter_mut().for_each(|v| *v = (*v - m) / sd);
                sds.push(sd);
            } else {
                col.fill(0.0);
                sds.push(0.0);
            }
            means.push(m);
        }
        Ok(Self {
            z,
            means,
            sds,
            y: labels.iter().map(|&l| l as f64).collect(),
        })
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    fn p(&self) -> usize {
        self.z.ncols()
    }

    /// Smallest penalty at which every coefficient is zero.
    pub fn lambda_max(&self) -> f64 {
        let n = self.n() as f64;
        let ybar = self.y.iter().sum::<f64>() / n;
        self.z
            .column_iter()
            .map(|c| (c.iter().zip(&self.y).map(|(z, y)| z * (y - ybar)).sum::<f64>() / n).abs())
            .fold(0.0, f64::max)
    }

    /// Intercept-only optimum.
    pub fn null_state(&self) -> LassoState {
        let ybar = self.y.iter().sum::<f64>() / self.n() as f64;
        LassoState {
            intercept: (ybar / (1.0 - ybar)).ln(),
            gamma: vec![0.0; self.p()],
        }
    }

    fn eta(&self, state: &LassoState) -> Vec<f64> {
        let mut eta = vec![state.intercept; self.n()];
        for (j, &g) in state.gamma.iter().enumerate() {
            if g != 0.0 {
                for (e, z) in eta.iter_mut().zip(self.z.column(j).iter()) {
                    *e += g * z;
                }
            }
        }
        eta
    }

    fn risk(&self, eta: &[f64]) -> f64 {
        let total: f64 = eta
            .iter()
            .zip(&self.y)
            .map(|(&e, &y)| if y == 1.0 { super::softplus(-e) } else { super::softplus(e) })
            .sum();
        total / eta.len() as f64
    }

    /// Fraction of the null deviance explained by `state`.
    pub fn deviance_ratio(&self, state: &LassoState) -> f64 {
        let null = self.risk(&self.eta(&self.null_state()));
        1.0 - self.risk(&self.eta(state)) / null
    }

    pub fn objective(&self, state: &LassoState, lambda: f64) -> f64 {
        let l1: f64 = state.gamma.iter().map(|g| g.abs()).sum();
        self.risk(&self.eta(state)) + lambda * l1
    }

    /// Minimize the penalized objective from `state` (updated in place).
    /// Returns the objective trace, outer iteration count and convergence flag.
    pub fn solve(
        &self,
        lambda: f64,
        state: &mut LassoState,
        cfg: &LassoConfig,
    ) -> (Vec<f64>, usize, bool) {
        let n = self.n() as f64;
        let p = self.p();
        let mut eta = self.eta(state);
        let l1 = |g: &[f64]| g.iter().map(|v| v.abs()).sum::<f64>();
        let mut obj = self.risk(&eta) + lambda * l1(&state.gamma);
        let mut trace = vec![obj];
        // coordinate moves are measured as sqrt(h_j) |delta_j|, i.e. the square
        // root of the quadratic-model decrease they buy
        let inner_tol = cfg.tol.sqrt() * 0.03;

        for iter in 1..=cfg.max_iter {
            let probs: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
            let w: Vec<f64> = probs.iter().map(|&q| (q * (1.0 - q)).max(MIN_WEIGHT)).collect();
            let r: Vec<f64> = self.y.iter().zip(&probs).map(|(y, q)| y - q).collect();
            let w_sum: f64 = w.iter().sum();
            let w_bar = w_sum / n;

            // Covariance form of the weighted least-squares subproblem: every
            // coordinate update touches p numbers instead of n.
            let zw = DMatrix::from_fn(self.n(), p, |i, j| self.z[(i, j)] * w[i]);
            let gram = self.z.tr_mul(&zw) / n;
            let w_mean: Vec<f64> = zw.column_iter().map(|c| c.sum() / n).collect();
            let c0 = r.iter().sum::<f64>() / n;
            let cz: Vec<f64> = self.z.column_iter().map(|c| c.iter().zip(&r).map(|(z, r)| z * r).sum::<f64>() / n).collect();
            let h: Vec<f64> = (0..p).map(|j| if self.sds[j] == 0.0 { 0.0 } else { gram[(j, j)] }).collect();

            let mut b0 = state.intercept;
            let mut gamma = state.gamma.clone();
            // q_j = z_j' W u / n and su = 1' W u / n for the proposed change u of eta
            let mut q = vec![0.0; p];
            let mut su = 0.0;

            let sweep = |only_active: bool, gamma: &mut Vec<f64>, b0: &mut f64, q: &mut Vec<f64>, su: &mut f64| {
                let d0 = (c0 - *su) / w_bar;
                *b0 += d0;
                *su += w_bar * d0;
                q.iter_mut().zip(&w_mean).for_each(|(qk, m)| *qk += m * d0);
                let mut max_change = d0.abs() * w_bar.sqrt();
                for j in 0..p {
                    if h[j] == 0.0 || (only_active && gamma[j] == 0.0) {
                        continue;
                    }
                    let old = gamma[j];
                    let new = soft_threshold(cz[j] - q[j] + h[j] * old, lambda) / h[j];
                    if new != old {
                        let d = new - old;
                        q.iter_mut().zip(gram.column(j).iter()).for_each(|(qk, g)| *qk += g * d);
                        *su += w_mean[j] * d;
                        gamma[j] = new;
                        max_change = max_change.max(d.abs() * h[j].sqrt());
                    }
                }
                max_change
            };

            let mut sweeps = 0;
            while sweeps < cfg.max_sweeps {
                sweeps += 1;
                if sweep(false, &mut gamma, &mut b0, &mut q, &mut su) < inner_tol {
                    break;
                }
                while sweeps < cfg.max_sweeps {
                    sweeps += 1;
                    if sweep(true, &mut gamma, &mut b0, &mut q, &mut su) < inner_tol {
                        break;
                    }
                }
            }

            let d0 = b0 - state.intercept;
            let dg: Vec<f64> = gamma.iter().zip(&state.gamma).map(|(a, b)| a - b).collect();
            let mut u = vec![d0; self.n()];
            for (j, &d) in dg.iter().enumerate() {
                if d != 0.0 {
                    u.iter_mut().zip(self.z.column(j).iter()).for_each(|(ui, z)| *ui += d * z);
                }
            }
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..30 {
                let trial_eta: Vec<f64> = eta.iter().zip(&u).map(|(e, u)| e + t * u).collect();
                let trial_gamma: Vec<f64> = state.gamma.iter().zip(&dg).map(|(g, d)| g + t * d).collect();
                let trial_obj = self.risk(&trial_eta) + lambda * l1(&trial_gamma);
                if trial_obj <= obj {
                    accepted = Some((trial_eta, trial_gamma, trial_obj));
                    break;
                }
                t *= 0.5;
            }
            let Some((next_eta, next_gamma, next_obj)) = accepted else {
                return (trace, iter, true);
            };
            debug_assert!(next_obj <= obj);
            let max_step = dg
                .iter()
                .zip(&h)
                .fold(d0.abs() * (w_sum / n).sqrt(), |m, (v, hj)| m.max(v.abs() * hj.sqrt()))
                * t;
            state.intercept += t * d0;
            state.gamma = next_gamma;
            eta = next_eta;
            obj = next_obj;
            trace.push(obj);
            let decrease = trace[trace.len() - 2] - obj;
            if max_step < 3.0 * inner_tol || decrease < 1e-3 * cfg.tol * obj.abs().max(1e-3) {
                return (trace, iter, true);
            }
        }
        (trace, cfg.max_iter, false)
    }

    /// Map a standardized-scale iterate back to original feature units.
    pub fn to_coefficients(&self, state: &LassoState, lambda: f64) -> Coefficients {
        let beta: Vec<f64> = state
            .gamma
            .iter()
            .zip(&self.sds)
            .map(|(&g, &sd)| if sd == 0.0 || g == 0.0 { 0.0 } else { g / sd })
            .collect();
        let shift: f64 = beta.iter().zip(&self.means).map(|(b, m)| b * m).sum();
        Coefficients {
            intercept: state.intercept - shift,
            beta,
            lambda: Some(lambda),
        }
    }

    fn to_state(&self, coef: &Coefficients) -> LassoState {
        let gamma: Vec<f64> = coef.beta.iter().zip(&self.sds).map(|(b, sd)| b * sd).collect();
        let shift: f64 = coef.beta.iter().zip(&self.means).map(|(b, m)| b * m).sum();
        LassoState {
            intercept: coef.intercept + shift,
            gamma,
        }
    }

    pub fn fit(&self, lambda: f64, warm: Option<&LassoState>, cfg: &LassoConfig) -> (LassoFit, LassoState) {
        if lambda >= self.lambda_max() {
            let state = self.null_state();
            let obj = self.objective(&state, lambda);
            let fit = LassoFit {
                coefficients: self.to_coefficients(&state, lambda),
                objective_trace: vec![obj],
                iterations: 0,
                converged: true,
            };
            return (fit, state);
        }
        let mut state = warm.cloned().unwrap_or_else(|| self.null_state());
        let (objective_trace, iterations, converged) = self.solve(lambda, &mut state, cfg);
        let fit = LassoFit {
            coefficients: self.to_coefficients(&state, lambda),
            objective_trace,
            iterations,
            converged,
        };
        (fit, state)
    }
}

pub fn lambda_max(x: &DMatrix<f64>, labels: &[u8]) -> Result<f64> {
    Ok(LassoProblem::new(x, labels)?.lambda_max())
}

pub fn fit_lasso(x: &DMatrix<f64>, labels: &[u8], lambda: f64, cfg: &LassoConfig) -> Result<LassoFit> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let problem = LassoProblem::new(x, labels)?;
    Ok(problem.fit(lambda, None, cfg).0)
}

/// Largest violation of the Lasso optimality conditions, on the standardized scale.
///
/// For zero weights the gradient must lie within `[-lambda, lambda]`; for
/// nonzero weights it must equal `-lambda * sign(weight)`; the intercept
/// gradient must vanish.
pub fn kkt_residual(x: &DMatrix<f64>, labels: &[u8], coef: &Coefficients, lambda: f64) -> Result<f64> {
    let problem = LassoProblem::new(x, labels)?;
    let state = problem.to_state(coef);
    let eta = problem.eta(&state);
    let n = problem.n() as f64;
    let resid: Vec<f64> = eta.iter().zip(&problem.y).map(|(&e, y)| sigmoid(e) - y).collect();
    let mut worst = (resid.iter().sum::<f64>() / n).abs();
    for (j, &g) in state.gamma.iter().enumerate() {
        if problem.sds[j] == 0.0 {
            continue;
        }
        let grad = problem.z.column(j).iter().zip(&resid).map(|(z, r)| z * r).sum::<f64>() / n;
        let v = if g == 0.0 {
            (grad.abs() - lambda).max(0.0)
        } else {
            (grad + lambda * g.signum()).abs()
        };
        worst = worst.max(v);
    }
    Ok(worst)
}
