//! Dataset ingestion, preprocessing and summary statistics.
//!
//! The preprocessing pipeline runs four filters in a fixed order:
//! quasi-constant removal, greedy correlation pruning, min-max scaling and a
//! minimum-distinct-values filter. Feature order is preserved throughout.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::glm::sigmoid;
use crate::seed;

/// A table as read from disk: numeric feature columns plus a binary target.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub feature_names: Vec<String>,
    /// Column-major feature values, one `Vec` per feature, each of length `n_rows`.
    pub features: Vec<Vec<f64>>,
    pub target_name: String,
    pub target: Vec<u8>,
    pub n_rows: usize,
}

/// Preprocessed feature matrix with the true class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `n x p` feature matrix.
    pub x: DMatrix<f64>,
    pub y: Vec<u8>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_positive(&self) -> usize {
        self.y.iter().filter(|&&v| v == 1).count()
    }

    /// Rows `idx` of the dataset, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Convert back to a `RawTable` so the dataset can be fed through `preprocess`.
    pub fn into_raw(self, target_name: &str) -> RawTable {
        let n_rows = self.x.nrows();
        let features = self
            .x
            .column_iter()
            .map(|c| c.iter().copied().collect())
            .collect();
        RawTable {
            feature_names: self.feature_names,
            features,
            target_name: target_name.to_string(),
            target: self.y,
            n_rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub corr_threshold: f64,
    pub quasi_const_share: f64,
    pub min_unique: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            corr_threshold: 0.9,
            quasi_const_share: 0.9,
            min_unique: 5,
        }
    }
}

/// Per-dataset characteristics, one row of the dataset summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub n_features: usize,
    pub n_obs: usize,
    /// Features with fewer than 15 distinct values.
    pub n_noncont: usize,
    pub n_cont: usize,
    pub n_neg: usize,
    pub n_pos: usize,
    pub pos_pct: f64,
    pub mean_abs_corr: f64,
    /// False when fewer than two features exist and `mean_abs_corr` was reported as 0.
    pub mean_abs_corr_defined: bool,
}

pub const NONCONT_UNIQUE_LIMIT: usize = 15;

pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, target_column)
}

/// Parse a comma-delimited table with a header row.
///
/// Columns whose cells all parse as numbers are numeric. Columns where no
/// cell parses are categorical and get integer codes by lexicographic level
/// order. A column mixing both, or any empty cell, is rejected.
pub fn read_csv<R: Read>(reader: R, target_column: &str) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let target_idx = header
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingTarget(target_column.to_string()))?;

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for record in rdr.records() {
        let record = record?;
        for (col, cell) in record.iter().enumerate() {
            cells[col].push(cell.to_string());
        }
    }
    let n_rows = cells[0].len();
    if n_rows == 0 {
        return Err(Error::EmptyTable);
    }

    let target = encode_target(&header[target_idx], &cells[target_idx])?;
    let mut feature_names = Vec::with_capacity(header.len() - 1);
    let mut features = Vec::with_capacity(header.len() - 1);
    for (col, name) in header.iter().enumerate() {
        if col == target_idx {
            continue;
        }
        features.push(encode_feature(name, &cells[col])?);
        feature_names.push(name.clone());
    }

    Ok(RawTable {
        feature_names,
        features,
        target_name: target_column.to_string(),
        target,
        n_rows,
    })
}

fn encode_target(name: &str, cells: &[String]) -> Result<Vec<u8>> {
    let mut levels: Vec<&str> = cells.iter().map(String::as_str).collect();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() != 2 {
        return Err(Error::NonBinaryTarget {
            column: name.to_string(),
            found: levels.len(),
        });
    }
    // Numeric targets order numerically ("9" < "10"); anything else lexicographically.
    let negative = match (levels[0].parse::<f64>(), levels[1].parse::<f64>()) {
        (Ok(a), Ok(b)) if b < a => levels[1],
        _ => levels[0],
    };
    Ok(cells
        .iter()
        .map(|c| u8::from(c.as_str() != negative))
        .collect())
}

fn encode_feature(name: &str, cells: &[String]) -> Result<Vec<f64>> {
    let parsed: Vec<Option<f64>> = cells
        .iter()
        .map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect();
    let n_numeric = parsed.iter().filter(|v| v.is_some()).count();
    let unparseable = |row: usize| Error::UnparseableCell {
        row,
        column: name.to_string(),
        value: cells[row].clone(),
    };
    if let Some(row) = cells.iter().position(String::is_empty) {
        return Err(unparseable(row));
    }
    if n_numeric == cells.len() {
        return Ok(parsed.into_iter().map(Option::unwrap).collect());
    }
    if n_numeric > 0 {
        let row = parsed.iter().position(Option::is_none).unwrap();
        return Err(unparseable(row));
    }
    let levels: BTreeMap<&str, usize> = {
        let mut set: Vec<&str> = cells.iter().map(String::as_str).collect();
        set.sort_unstable();
        set.dedup();
        set.into_iter().enumerate().map(|(i, l)| (l, i)).collect()
    };
    Ok(cells.iter().map(|c| levels[c.as_str()] as f64).collect())
}

fn value_key(v: f64) -> u64 {
    // Collapse -0.0 onto 0.0 so they count as the same level.
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

fn value_counts(col: &[f64]) -> HashMap<u64, usize> {
    let mut counts = HashMap::new();
    for &v in col {
        *counts.entry(value_key(v)).or_insert(0) += 1;
    }
    counts
}

fn n_unique<'a>(col: impl IntoIterator<Item = &'a f64>) -> usize {
    let mut keys: Vec<u64> = col.into_iter().map(|&v| value_key(v)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// Pearson correlation; `None` when either column has zero variance.
pub fn pearson<'a, 'b>(
    a: impl IntoIterator<Item = &'a f64> + Clone,
    b: impl IntoIterator<Item = &'b f64> + Clone,
) -> Option<f64> {
    let (mut n, mut sa, mut sb) = (0usize, 0.0, 0.0);
    for (x, y) in a.clone().into_iter().zip(b.clone()) {
        n += 1;
        sa += x;
        sb += y;
    }
    if n == 0 {
        return None;
    }
    let (ma, mb) = (sa / n as f64, sb / n as f64);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.into_iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

pub fn preprocess(raw: &RawTable, cfg: &PreprocessConfig) -> Result<Dataset> {
    if !(cfg.corr_threshold > 0.0 && cfg.corr_threshold <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "corr_threshold must lie in (0, 1], got {}",
            cfg.corr_threshold
        )));
    }
    let n_pos = raw.target.iter().filter(|&&t| t == 1).count();
    if n_pos == 0 || n_pos == raw.n_rows {
        return Err(Error::SingleClass);
    }

    // 1. quasi-constant features
    let mut kept: Vec<usize> = (0..raw.features.len())
        .filter(|&j| {
            let col = &raw.features[j];
            let modal = value_counts(col).into_values().max().unwrap_or(0);
            modal as f64 / col.len() as f64 <= cfg.quasi_const_share
        })
        .collect();

    // 2. greedy correlation pruning, always dropping the later feature
    let mut dropped = vec![false; raw.features.len()];
    for (a, &i) in kept.iter().enumerate() {
        if dropped[i] {
            continue;
        }
        for &j in &kept[a + 1..] {
            if dropped[j] {
                continue;
            }
            let rho = pearson(&raw.features[i], &raw.features[j]).unwrap_or(0.0);
            if rho.abs() > cfg.corr_threshold {
                dropped[j] = true;
            }
        }
    }
    kept.retain(|&j| !dropped[j]);

    // 3. min-max scaling, then 4. distinct-value filter
    let mut names = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for j in kept {
        let col = &raw.features[j];
        let (lo, hi) = col
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if hi <= lo {
            warn!(
                "feature `{}` is constant after filtering; dropped",
                raw.feature_names[j]
            );
            continue;
        }
        let range = hi - lo;
        let scaled: Vec<f64> = col.iter().map(|&v| (v - lo) / range).collect();
        if n_unique(&scaled) < cfg.min_unique {
            continue;
        }
        names.push(raw.feature_names[j].clone());
        columns.push(scaled);
    }
    if columns.is_empty() {
        return Err(Error::AllFeaturesEliminated);
    }

    let x = DMatrix::from_fn(raw.n_rows, columns.len(), |i, j| columns[j][i]);
    Ok(Dataset {
        x,
        y: raw.target.clone(),
        feature_names: names,
    })
}

pub fn summarize(ds: &Dataset) -> DatasetSummary {
    let p = ds.n_features();
    let n = ds.n_rows();
    let n_noncont = ds
        .x
        .column_iter()
        .filter(|c| n_unique(c.iter()) < NONCONT_UNIQUE_LIMIT)
        .count();
    let n_pos = ds.n_positive();

    let (mean_abs_corr, defined) = if p >= 2 {
        let mut total = 0.0;
        for i in 0..p - 1 {
            for j in i + 1..p {
                total += pearson(ds.x.column(i).iter(), ds.x.column(j).iter())
                    .unwrap_or(0.0)
                    .abs();
            }
        }
        (2.0 * total / (p * (p - 1)) as f64, true)
    } else {
        (0.0, false)
    };

    DatasetSummary {
        n_features: p,
        n_obs: n,
        n_noncont,
        n_cont: p - n_noncont,
        n_neg: n - n_pos,
        n_pos,
        pos_pct: 100.0 * n_pos as f64 / n as f64,
        mean_abs_corr,
        mean_abs_corr_defined: defined,
    }
}

pub const SUMMARY_HEADER: [&str; 9] = [
    "Dataset",
    "Feat",
    "Obs",
    "Non-Cont Var",
    "Cont Var",
    "Neg Inst",
    "Pos Inst",
    "Pos %",
    "Mean Abs Corr",
];

/// Write a one-row summary CSV (header plus data row).
pub fn write_summary_csv<W: Write>(out: W, name: &str, s: &DatasetSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    w.write_record([
        name.to_string(),
        s.n_features.to_string(),
        s.n_obs.to_string(),
        s.n_noncont.to_string(),
        s.n_cont.to_string(),
        s.n_neg.to_string(),
        s.n_pos.to_string(),
        format!("{:.2}", s.pos_pct),
        format!("{:.2}", s.mean_abs_corr),
    ])?;
    w.flush().map_err(|e| Error::io("<summary>", e))?;
    Ok(())
}

/// Parameters of the synthetic `artif` generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifConfig {
    pub n: usize,
    pub p: usize,
    pub n_relevant: usize,
    /// Relevant feature `j` (1-based) has standard deviation `j * sigma0`.
    pub sigma0: f64,
    /// Common coefficient of every relevant feature.
    pub beta: f64,
    /// Fixed intercept; `None` calibrates it to hit `target_share`.
    pub intercept: Option<f64>,
    pub target_share: f64,
}

impl Default for ArtifConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            p: 21,
            n_relevant: 5,
            sigma0: 0.2,
            beta: 1.0,
            intercept: None,
            target_share: 0.5,
        }
    }
}

/// Intercept `b` with `mean_i sigmoid(b + eta_i) = share`, by bisection.
fn calibrate_intercept(eta: &[f64], share: f64) -> f64 {
    let mean_at = |b: f64| eta.iter().map(|&e| sigmoid(b + e)).sum::<f64>() / eta.len() as f64;
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) < share {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Synthetic logistic data with a few relevant features of increasing spread.
///
/// Returned unscaled; run it through [`preprocess`] (via [`Dataset::into_raw`])
/// to get the same treatment as the file-based datasets.
pub fn generate_artif(cfg: &ArtifConfig, seed: u64) -> Result<Dataset> {
    if cfg.n_relevant < 1 || cfg.n_relevant > cfg.p {
        return Err(Error::InvalidParameter(format!(
            "n_relevant must lie in [1, p={}], got {}",
            cfg.p, cfg.n_relevant
        )));
    }
    if !(cfg.target_share > 0.0 && cfg.target_share < 1.0) {
        return Err(Error::InvalidParameter(
            "target_share must lie in (0, 1)".into(),
        ));
    }
    let mut rng = seed::rng(seed);
    let mut x = DMatrix::zeros(cfg.n, cfg.p);
    for j in 0..cfg.p {
        let sd = if j < cfg.n_relevant {
            (j + 1) as f64 * cfg.sigma0
        } else {
            1.0
        };
        for i in 0..cfg.n {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[(i, j)] = sd * z;
        }
    }
    let eta: Vec<f64> = (0..cfg.n)
        .map(|i| (0..cfg.n_relevant).map(|j| cfg.beta * x[(i, j)]).sum())
        .collect();
    let b0 = cfg
        .intercept
        .unwrap_or_else(|| calibrate_intercept(&eta, cfg.target_share));
    let y = eta
        .iter()
        .map(|&e| u8::from(rand::Rng::random::<f64>(&mut rng) < sigmoid(b0 + e)))
        .collect();
    Ok(Dataset {
        x,
        y,
        feature_names: (1..=cfg.p).map(|j| format!("x{j}")).collect(),
    })
}
