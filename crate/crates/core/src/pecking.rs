//! Cluster cleaning by "pecking".
//!
//! One repetition draws a fraction `q` of the labeled rows, mixes them into the
//! unlabeled pool, splits that pool with 2-means, and marks the cluster that
//! captured more of the drawn labeled rows as positive. A logistic model (or the
//! LassoJoint chain) is then fitted on the cleaned labels. Repetitions are
//! combined by averaging coefficients:
//!
//! * `Clust`: plain mean of dense logistic coefficients.
//! * `Strict`: features selected in every repetition, averaged over all reps.
//! * `NonStrict`: features selected in any repetition, averaged over the reps
//!   that selected them.

use nalgebra::DMatrix;
use rand::seq::index;

use crate::cluster2::{two_means, TwoMeansConfig};
use crate::error::{Error, Result};
use crate::glm::{fit_logistic, lasso_joint, Coefficients, LassoJointConfig, LogisticConfig};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PeckMode {
    Clust,
    Strict,
    NonStrict,
}

/// Model fitted on each repetition's cleaned labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepFitter {
    Logistic,
    LassoJoint,
}

impl PeckMode {
    pub fn fitter(&self) -> RepFitter {
        match self {
            PeckMode::Clust => RepFitter::Logistic,
            PeckMode::Strict | PeckMode::NonStrict => RepFitter::LassoJoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanedLabels {
    pub y_hat: Vec<u8>,
    /// Rows of the pool assigned to the positive cluster.
    pub cluster_pos_indices: Vec<usize>,
    /// Labeled rows drawn into the pool.
    pub pecked_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeckingConfig {
    pub two_means: TwoMeansConfig,
    pub logistic: LogisticConfig,
    pub lasso_joint: LassoJointConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeckedModel {
    pub mode: PeckMode,
    pub coefficients: Coefficients,
    pub per_rep: Vec<Coefficients>,
    pub q: f64,
    pub reps: usize,
}

/// Number of labeled rows drawn for fraction `q`: `ceil(q * n_labeled)`, at least 1.
pub fn peck_count(q: f64, n_labeled: usize) -> usize {
    // the epsilon keeps e.g. 0.5 * 10 from rounding up to 6
    (((q * n_labeled as f64) - 1e-9).ceil().max(1.0) as usize).min(n_labeled)
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!("q must lie in (0, 1], got {q}")));
    }
    Ok(())
}

pub fn peck_once(
    x: &DMatrix<f64>,
    s: &[u8],
    q: f64,
    seed_: u64,
    cluster_cfg: &TwoMeansConfig,
) -> Result<CleanedLabels> {
    check_q(q)?;
    if s.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: s.len(),
        });
    }
    let labeled: Vec<usize> = (0..s.len()).filter(|&i| s[i] == 1).collect();
    if labeled.is_empty() {
        return Err(Error::NoLabeled);
    }

    let mut rng = seed::rng(seed::derive(seed_, &[0]));
    let n_draw = peck_count(q, labeled.len());
    let mut pecked: Vec<usize> = index::sample(&mut rng, labeled.len(), n_draw)
        .into_iter()
        .map(|k| labeled[k])
        .collect();
    pecked.sort_unstable();

    let mut is_pecked = vec![false; s.len()];
    for &i in &pecked {
        is_pecked[i] = true;
    }
    let pool: Vec<usize> = (0..s.len()).filter(|&i| s[i] == 0 || is_pecked[i]).collect();
    let clustering = two_means(&x.select_rows(&pool), seed::derive(seed_, &[1]), cluster_cfg)?;

    let mut drawn_in = [0usize; 2];
    for (k, &i) in pool.iter().enumerate() {
        if is_pecked[i] {
            drawn_in[clustering.assignment[k] as usize] += 1;
        }
    }
    let positive_cluster = if drawn_in[0] != drawn_in[1] {
        u8::from(drawn_in[1] > drawn_in[0])
    } else {
        // tie: the cluster whose centroid sits nearer the labeled-row mean
        let n_lab = labeled.len() as f64;
        let center: Vec<f64> = (0..x.ncols())
            .map(|j| labeled.iter().map(|&i| x[(i, j)]).sum::<f64>() / n_lab)
            .collect();
        let dist = |k: usize| -> f64 {
            clustering
                .centroids
                .row(k)
                .iter()
                .zip(&center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        };
        u8::from(dist(1) < dist(0))
    };

    let cluster_pos_indices: Vec<usize> = pool
        .iter()
        .enumerate()
        .filter(|(k, _)| clustering.assignment[*k] == positive_cluster)
        .map(|(_, &i)| i)
        .collect();
    let mut y_hat = s.to_vec();
    for &i in &cluster_pos_indices {
        y_hat[i] = 1;
    }

    Ok(CleanedLabels {
        y_hat,
        cluster_pos_indices,
        pecked_indices: pecked,
    })
}

/// Seed of repetition `rep` of a pecking run.
pub fn rep_seed(seed_: u64, rep: usize) -> u64 {
    seed::derive(seed_, &[rep as u64])
}

/// Per-repetition coefficients (full feature arity) for `reps` pecking rounds.
pub fn pecked_fits(
    x: &DMatrix<f64>,
    s: &[u8],
    q: f64,
    reps: usize,
    fitter: RepFitter,
    cfg: &PeckingConfig,
    seed_: u64,
) -> Result<Vec<Coefficients>> {
    if reps == 0 {
        return Err(Error::InvalidParameter("at least one repetition is required".into()));
    }
    (0..reps)
        .map(|rep| {
            let rs = rep_seed(seed_, rep);
            let fit = || -> Result<Coefficients> {
                let cleaned = peck_once(x, s, q, rs, &cfg.two_means)?;
                match fitter {
                    RepFitter::Logistic => Ok(fit_logistic(x, &cleaned.y_hat, &cfg.logistic)?.coefficients),
                    RepFitter::LassoJoint => Ok(lasso_joint(
                        x,
                        &cleaned.y_hat,
                        &cfg.lasso_joint,
                        seed::derive(rs, &[2]),
                    )?
                    .model
                    .coefficients),
                }
            };
            fit().map_err(|e| Error::Repetition {
                rep,
                source: Box::new(e),
            })
        })
        .collect()
}

pub fn aggregate_coefficients(per_rep: &[Coefficients], mode: PeckMode) -> Result<Coefficients> {
    let first = per_rep
        .first()
        .ok_or_else(|| Error::InvalidParameter("no repetitions to aggregate".into()))?;
    let p = first.n_features();
    if let Some(bad) = per_rep.iter().find(|c| c.n_features() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: bad.n_features(),
        });
    }
    let r = per_rep.len() as f64;
    let intercept = per_rep.iter().map(|c| c.intercept).sum::<f64>() / r;
    let beta = (0..p)
        .map(|j| {
            let values = per_rep.iter().map(|c| c.beta[j]);
            let present = per_rep.iter().filter(|c| c.beta[j] != 0.0).count();
            match mode {
                PeckMode::Clust => values.sum::<f64>() / r,
                PeckMode::Strict if present == per_rep.len() => values.sum::<f64>() / r,
                PeckMode::Strict => 0.0,
                PeckMode::NonStrict if present > 0 => values.sum::<f64>() / present as f64,
                PeckMode::NonStrict => 0.0,
            }
        })
        .collect();
    Ok(Coefficients {
        intercept,
        beta,
        lambda: None,
    })
}

pub fn run_pecking(
    x: &DMatrix<f64>,
    s: &[u8],
    q: f64,
    reps: usize,
    mode: PeckMode,
    cfg: &PeckingConfig,
    seed_: u64,
) -> Result<PeckedModel> {
    let per_rep = pecked_fits(x, s, q, reps, mode.fitter(), cfg, seed_)?;
    let coefficients = aggregate_coefficients(&per_rep, mode)?;
    Ok(PeckedModel {
        mode,
        coefficients,
        per_rep,
        q,
        reps,
    })
}
