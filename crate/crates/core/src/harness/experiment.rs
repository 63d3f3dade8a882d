use std::time::Instant;

use log::{info, warn};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::config::{DatasetSource, DatasetSpec, ExperimentConfig, Method};
use crate::data::{generate_artif, load_csv, preprocess, Dataset, PreprocessConfig};
use crate::error::{Error, Result};
use crate::glm::{fit_logistic, lasso_joint, predict_posterior, Coefficients, LassoJointConfig};
use crate::labelling::{assign, Scheme};
use crate::metrics::{auc, confusion, f1, hard_labels};
use crate::pecking::{aggregate_coefficients, pecked_fits, PeckMode, PeckingConfig, RepFitter};
use crate::seed::{self, hash_str};

/// One evaluated (dataset, c, replication, method, q) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub scheme: Scheme,
    pub method: Method,
    pub c_target: f64,
    pub realized_c: f64,
    /// Pecking fraction; `None` for methods that do not peck.
    pub q: Option<f64>,
    pub replication_index: usize,
    pub accuracy: f64,
    pub f1: f64,
    pub auc: f64,
    pub fit_seconds: f64,
    /// Set when the cell failed; metrics are NaN then.
    pub error: Option<String>,
}

impl ResultRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Monte Carlo replications for a dataset of the given size.
pub fn replication_count(n_rows: usize, n_cols: usize) -> usize {
    if n_cols < 100 || n_rows < 10_000 {
        100
    } else {
        10
    }
}

#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub name: String,
    pub data: Dataset,
}

/// Load (or generate) and preprocess one configured dataset.
pub fn prepare_dataset(spec: &DatasetSpec, cfg: &ExperimentConfig) -> Result<PreparedDataset> {
    let pre = PreprocessConfig {
        corr_threshold: cfg.corr_threshold,
        ..Default::default()
    };
    let raw = match &spec.source {
        DatasetSource::Csv { path, target } => load_csv(path, target)?,
        DatasetSource::Artif(a) => {
            generate_artif(a, seed::derive(cfg.master_seed, &[hash_str("artif"), hash_str(&spec.name)]))?
                .into_raw("y")
        }
    };
    let data = preprocess(&raw, &pre)?;
    info!(
        "{}: {} rows, {} features after preprocessing",
        spec.name,
        data.n_rows(),
        data.n_features()
    );
    Ok(PreparedDataset {
        name: spec.name.clone(),
        data,
    })
}

/// Train/test row indices, stratified on the surrogate label.
pub fn stratified_split(s: &[u8], train_frac: f64, seed_: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = seed::rng(seed_);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..s.len()).filter(|&i| s[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let n_train = ((train_frac * idx.len() as f64).round() as usize).clamp(1, idx.len());
        test.extend_from_slice(&idx[n_train..]);
        idx.truncate(n_train);
        train.extend(idx);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Accuracy, F1 and AUC of `coef` as a classifier of the true labels.
pub fn evaluate(x: &DMatrix<f64>, y: &[u8], coef: &Coefficients) -> Result<(f64, f64, f64)> {
    let post = predict_posterior(coef, x)?;
    let cc = confusion(y, &hard_labels(&post))?;
    Ok((crate::metrics::accuracy(&cc), f1(&cc).value, auc(y, &post)?))
}

pub fn cell_seed(master: u64, dataset: &str, scheme: Scheme, c: f64, rep: usize) -> u64 {
    seed::derive(
        master,
        &[hash_str(dataset), hash_str(scheme.as_str()), c.to_bits(), rep as u64],
    )
}

struct Cell<'a> {
    data: &'a PreparedDataset,
    c: f64,
    rep: usize,
}

/// Every (method, q) slot a cell produces, in report order.
fn slots(cfg: &ExperimentConfig) -> Vec<(Method, Option<f64>)> {
    let mut out = Vec::new();
    for &m in &cfg.methods {
        if m.uses_q() {
            out.extend(cfg.q_list.iter().map(|&q| (m, Some(q))));
        } else {
            out.push((m, None));
        }
    }
    out
}

fn run_cell(cell: &Cell, cfg: &ExperimentConfig) -> Vec<ResultRow> {
    let ds = &cell.data.data;
    let cs = cell_seed(cfg.master_seed, &cell.data.name, cfg.scheme, cell.c, cell.rep);
    let row = |method, q, realized_c, outcome: Result<((f64, f64, f64), f64)>| match outcome {
        Ok(((accuracy, f1, auc), fit_seconds)) => ResultRow {
            dataset: cell.data.name.clone(),
            scheme: cfg.scheme,
            method,
            c_target: cell.c,
            realized_c,
            q,
            replication_index: cell.rep,
            accuracy,
            f1,
            auc,
            fit_seconds,
            error: None,
        },
        Err(e) => ResultRow {
            dataset: cell.data.name.clone(),
            scheme: cfg.scheme,
            method,
            c_target: cell.c,
            realized_c,
            q,
            replication_index: cell.rep,
            accuracy: f64::NAN,
            f1: f64::NAN,
            auc: f64::NAN,
            fit_seconds: 0.0,
            error: Some(e.to_string()),
        },
    };

    let labels = match assign(ds, cfg.scheme, cell.c, cfg.propensity_vars, seed::derive(cs, &[hash_str("labels")])) {
        Ok(l) => l,
        Err(e) => {
            let msg = e.to_string();
            return slots(cfg)
                .into_iter()
                .map(|(m, q)| row(m, q, f64::NAN, Err(Error::Config(msg.clone()))))
                .collect();
        }
    };
    let realized_c = labels.realized_c;
    let (train, test) = stratified_split(&labels.s, cfg.split, seed::derive(cs, &[hash_str("split")]));
    let x_train = ds.x.select_rows(&train);
    let s_train: Vec<u8> = train.iter().map(|&i| labels.s[i]).collect();
    let x_test = ds.x.select_rows(&test);
    let y_test: Vec<u8> = test.iter().map(|&i| ds.y[i]).collect();

    let peck_cfg = PeckingConfig::default();
    let lj_cfg = LassoJointConfig::default();
    let timed = |f: &dyn Fn() -> Result<Coefficients>| -> Result<(Coefficients, f64)> {
        let t = Instant::now();
        let coef = f()?;
        Ok((coef, t.elapsed().as_secs_f64()))
    };
    let scored = |fit: Result<(Coefficients, f64)>| -> Result<((f64, f64, f64), f64)> {
        let (coef, secs) = fit?;
        Ok((evaluate(&x_test, &y_test, &coef)?, secs))
    };

    let mut rows = Vec::new();
    for &method in &cfg.methods {
        match method {
            Method::Naive => {
                let fit = timed(&|| Ok(fit_logistic(&x_train, &s_train, &peck_cfg.logistic)?.coefficients));
                rows.push(row(method, None, realized_c, scored(fit)));
            }
            Method::LassoJoint => {
                let fit = timed(&|| {
                    Ok(lasso_joint(&x_train, &s_train, &lj_cfg, seed::derive(cs, &[hash_str("LASSOJOINT")]))?
                        .model
                        .coefficients)
                });
                rows.push(row(method, None, realized_c, scored(fit)));
            }
            Method::Clust => {
                for &q in &cfg.q_list {
                    let fit = timed(&|| {
                        let per_rep = pecked_fits(
                            &x_train,
                            &s_train,
                            q,
                            cfg.reps,
                            RepFitter::Logistic,
                            &peck_cfg,
                            seed::derive(cs, &[hash_str("CLUST"), q.to_bits()]),
                        )?;
                        aggregate_coefficients(&per_rep, PeckMode::Clust)
                    });
                    rows.push(row(method, Some(q), realized_c, scored(fit)));
                }
            }
            Method::LassclustStrict => {
                // Both aggregation modes share the same per-repetition fits.
                let nonstrict = cfg.methods.contains(&Method::LassclustNonStrict);
                for &q in &cfg.q_list {
                    let t = Instant::now();
                    let per_rep = pecked_fits(
                        &x_train,
                        &s_train,
                        q,
                        cfg.reps,
                        RepFitter::LassoJoint,
                        &peck_cfg,
                        seed::derive(cs, &[hash_str("LASSCLUST"), q.to_bits()]),
                    );
                    let shared = t.elapsed().as_secs_f64();
                    let mut modes = vec![(Method::LassclustStrict, PeckMode::Strict)];
                    if nonstrict {
                        modes.push((Method::LassclustNonStrict, PeckMode::NonStrict));
                    }
                    for (m, mode) in modes {
                        let fit = match &per_rep {
                            Ok(reps) => {
                                let t = Instant::now();
                                aggregate_coefficients(reps, mode).map(|c| (c, shared + t.elapsed().as_secs_f64()))
                            }
                            Err(e) => Err(Error::Config(e.to_string())),
                        };
                        rows.push(row(m, Some(q), realized_c, scored(fit)));
                    }
                }
            }
            Method::LassclustNonStrict => {
                if cfg.methods.contains(&Method::LassclustStrict) {
                    continue; // emitted together with the strict variant
                }
                for &q in &cfg.q_list {
                    let fit = timed(&|| {
                        let per_rep = pecked_fits(
                            &x_train,
                            &s_train,
                            q,
                            cfg.reps,
                            RepFitter::LassoJoint,
                            &peck_cfg,
                            seed::derive(cs, &[hash_str("LASSCLUST"), q.to_bits()]),
                        )?;
                        aggregate_coefficients(&per_rep, PeckMode::NonStrict)
                    });
                    rows.push(row(method, Some(q), realized_c, scored(fit)));
                }
            }
        }
    }
    // keep rows grouped by method regardless of the shared strict/non-strict pass
    rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.q.partial_cmp(&b.q).expect("finite q")));
    rows
}

/// Run every configured cell. Per-cell failures become error rows; only
/// dataset loading errors abort the run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let prepared = cfg
        .datasets
        .iter()
        .map(|spec| prepare_dataset(spec, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for data in &prepared {
        let n_rep = cfg
            .replications
            .unwrap_or_else(|| replication_count(data.data.n_rows(), data.data.n_features()));
        for &c in &cfg.c_list {
            for rep in 0..n_rep {
                cells.push(Cell { data, c, rep });
            }
        }
    }
    info!("running {} cells", cells.len());

    let run = || -> Vec<ResultRow> {
        cells
            .par_iter()
            .map(|cell| run_cell(cell, cfg))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    let rows = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run),
        None => run(),
    };
    let failed = rows.iter().filter(|r| r.failed()).count();
    if failed > 0 {
        warn!("{failed} of {} result rows failed", rows.len());
    }
    Ok(rows)
}
