use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::Method;
use super::experiment::ResultRow;
use crate::error::{Error, Result};
use crate::labelling::Scheme;

pub const RAW_HEADER: [&str; 11] = [
    "dataset",
    "scheme",
    "method",
    "c_target",
    "realized_c",
    "q",
    "replication",
    "accuracy",
    "f1",
    "auc",
    "error",
];

/// Mean and sample standard deviation (0 for a single value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> MeanSd {
        let n = values.len() as f64;
        if values.is_empty() {
            return MeanSd { mean: f64::NAN, sd: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MeanSd { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub q: Option<f64>,
    pub n: usize,
    pub n_failed: usize,
    pub accuracy: MeanSd,
    pub f1: MeanSd,
    pub auc: MeanSd,
}

fn fmt_opt(q: Option<f64>) -> String {
    q.map(|v| v.to_string()).unwrap_or_default()
}

fn fmt_f(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn q_key(q: Option<f64>) -> Option<u64> {
    q.map(f64::to_bits)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Config(format!("{}: {kind:?}", path.display())),
    }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(csv_err(path))
}

pub fn write_raw(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(RAW_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.scheme.as_str().to_string(),
            r.method.to_string(),
            r.c_target.to_string(),
            fmt_f(r.realized_c),
            fmt_opt(r.q),
            r.replication_index.to_string(),
            fmt_f(r.accuracy),
            fmt_f(r.f1),
            fmt_f(r.auc),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a raw result CSV. Fit times are not stored there and come back as 0.
pub fn read_raw(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    if headers.iter().collect::<Vec<_>>() != RAW_HEADER {
        return Err(Error::Config(format!("{}: not a raw result file", path.display())));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let bad = |col: usize| Error::UnparseableCell {
            row: line + 1,
            column: RAW_HEADER[col].to_string(),
            value: rec[col].to_string(),
        };
        let num = |col: usize| -> Result<f64> {
            if rec[col].is_empty() {
                Ok(f64::NAN)
            } else {
                rec[col].parse().map_err(|_| bad(col))
            }
        };
        rows.push(ResultRow {
            dataset: rec[0].to_string(),
            scheme: rec[1].parse::<Scheme>().map_err(|_| bad(1))?,
            method: rec[2].parse().map_err(|_| bad(2))?,
            c_target: num(3)?,
            realized_c: num(4)?,
            q: if rec[5].is_empty() { None } else { Some(num(5)?) },
            replication_index: rec[6].parse().map_err(|_| bad(6))?,
            accuracy: num(7)?,
            f1: num(8)?,
            auc: num(9)?,
            fit_seconds: 0.0,
            error: (!rec[10].is_empty()).then(|| rec[10].to_string()),
        });
    }
    Ok(rows)
}

/// Per-(method, q) mean and sd over successful rows, in report column order.
pub fn summarize_rows(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Method, Option<u64>), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.method, q_key(r.q))).or_default().push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let ok: Vec<&&ResultRow> = g.iter().filter(|r| !r.failed()).collect();
            let col = |f: fn(&ResultRow) -> f64| MeanSd::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            SummaryRow {
                method: g[0].method,
                q: g[0].q,
                n: ok.len(),
                n_failed: g.len() - ok.len(),
                accuracy: col(|r| r.accuracy),
                f1: col(|r| r.f1),
                auc: col(|r| r.auc),
            }
        })
        .collect()
}

pub fn write_summary(summary: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "method", "q", "n", "n_failed", "accuracy_mean", "accuracy_sd", "f1_mean", "f1_sd", "auc_mean", "auc_sd",
    ])
    .map_err(csv_err(path))?;
    for s in summary {
        w.write_record([
            s.method.to_string(),
            fmt_opt(s.q),
            s.n.to_string(),
            s.n_failed.to_string(),
            fmt_f(s.accuracy.mean),
            fmt_f(s.accuracy.sd),
            fmt_f(s.f1.mean),
            fmt_f(s.f1.sd),
            fmt_f(s.auc.mean),
            fmt_f(s.auc.sd),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Wide layout: one line per q, a mean/sd column pair per (metric, method).
/// Methods without q repeat on every line.
pub fn write_wide_summary(summary: &[SummaryRow], path: &Path) -> Result<()> {
    let methods: Vec<Method> = Method::ALL
        .into_iter()
        .filter(|m| summary.iter().any(|s| s.method == *m))
        .collect();
    let mut qs: Vec<f64> = summary.iter().filter_map(|s| s.q).collect();
    qs.sort_by(f64::total_cmp);
    qs.dedup();
    let q_lines: Vec<Option<f64>> = if qs.is_empty() { vec![None] } else { qs.into_iter().map(Some).collect() };

    type Pick = fn(&SummaryRow) -> MeanSd;
    let metrics: [(&str, Pick); 3] = [("acc", |s| s.accuracy), ("f1", |s| s.f1), ("auc", |s| s.auc)];
    let mut header = vec!["q".to_string()];
    for (name, _) in &metrics {
        for m in &methods {
            let m = m.as_str().to_ascii_lowercase();
            header.push(format!("{m}_{name}_mean"));
            header.push(format!("{m}_{name}_sd"));
        }
    }
    let mut w = writer(path)?;
    w.write_record(&header).map_err(csv_err(path))?;
    for q in q_lines {
        let mut rec = vec![fmt_opt(q)];
        for (_, pick) in &metrics {
            for m in &methods {
                let hit = summary
                    .iter()
                    .find(|s| s.method == *m && (!m.uses_q() || q_key(s.q) == q_key(q)));
                match hit {
                    Some(s) => {
                        rec.push(fmt_f(pick(s).mean));
                        rec.push(fmt_f(pick(s).sd));
                    }
                    None => rec.extend([String::new(), String::new()]),
                }
            }
        }
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Means per (dataset, c, method, q), including the mean realized label frequency.
pub fn write_dataset_summary(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut groups: BTreeMap<(String, u64, Method, Option<u64>), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.failed()) {
        groups
            .entry((r.dataset.clone(), r.c_target.to_bits(), r.method, q_key(r.q)))
            .or_default()
            .push(r);
    }
    let mut w = writer(path)?;
    w.write_record([
        "dataset", "c_target", "method", "q", "n", "realized_c_mean", "accuracy_mean", "f1_mean", "auc_mean",
    ])
    .map_err(csv_err(path))?;
    for ((dataset, _, method, _), g) in groups {
        let mean = |f: fn(&ResultRow) -> f64| MeanSd::of(&g.iter().map(|r| f(r)).collect::<Vec<_>>()).mean;
        w.write_record([
            dataset,
            g[0].c_target.to_string(),
            method.to_string(),
            fmt_opt(g[0].q),
            g.len().to_string(),
            fmt_f(mean(|r| r.realized_c)),
            fmt_f(mean(|r| r.accuracy)),
            fmt_f(mean(|r| r.f1)),
            fmt_f(mean(|r| r.auc)),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_timing(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["dataset", "method", "c_target", "q", "replication", "fit_seconds"])
        .map_err(csv_err(path))?;
    for r in rows.iter().filter(|r| !r.failed()) {
        w.write_record([
            r.dataset.clone(),
            r.method.to_string(),
            r.c_target.to_string(),
            fmt_opt(r.q),
            r.replication_index.to_string(),
            r.fit_seconds.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub raw: PathBuf,
    pub summary: PathBuf,
    pub wide: PathBuf,
    pub by_dataset: PathBuf,
    pub timing: PathBuf,
}

fn write_summaries(rows: &[ResultRow], out_dir: &Path) -> Result<(PathBuf, PathBuf, PathBuf)> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let summary = summarize_rows(rows);
    let paths = (
        out_dir.join("summary.csv"),
        out_dir.join("summary_wide.csv"),
        out_dir.join("summary_by_dataset.csv"),
    );
    write_summary(&summary, &paths.0)?;
    write_wide_summary(&summary, &paths.1)?;
    write_dataset_summary(rows, &paths.2)?;
    Ok(paths)
}

/// Write raw rows, summaries and fit times into `out_dir`.
pub fn emit_report(rows: &[ResultRow], out_dir: &Path) -> Result<ReportFiles> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("no result rows to report".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let raw = out_dir.join("raw.csv");
    let timing = out_dir.join("timing.csv");
    write_raw(rows, &raw)?;
    write_timing(rows, &timing)?;
    let (summary, wide, by_dataset) = write_summaries(rows, out_dir)?;
    Ok(ReportFiles {
        raw,
        summary,
        wide,
        by_dataset,
        timing,
    })
}

/// Regenerate the summaries from a raw result CSV.
pub fn summarize_raw(raw: &Path, out_dir: &Path) -> Result<Vec<SummaryRow>> {
    let rows = read_raw(raw)?;
    if rows.is_empty() {
        return Err(Error::InvalidParameter(format!("{} has no rows", raw.display())));
    }
    write_summaries(&rows, out_dir)?;
    Ok(summarize_rows(&rows))
}
