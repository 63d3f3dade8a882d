use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::data::ArtifConfig;
use crate::error::{Error, Result};
use crate::labelling::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Naive,
    Clust,
    LassclustStrict,
    LassclustNonStrict,
    LassoJoint,
}

impl Method {
    /// Report column order.
    pub const ALL: [Method; 5] = [
        Method::Naive,
        Method::Clust,
        Method::LassclustStrict,
        Method::LassclustNonStrict,
        Method::LassoJoint,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Naive => "NAIVE",
            Method::Clust => "CLUST",
            Method::LassclustStrict => "LASSCLUST_STRICT",
            Method::LassclustNonStrict => "LASSCLUST_NONSTRICT",
            Method::LassoJoint => "LASSOJOINT",
        }
    }

    /// Whether the method loops over the pecking fraction `q`.
    pub fn uses_q(&self) -> bool {
        matches!(self, Method::Clust | Method::LassclustStrict | Method::LassclustNonStrict)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_uppercase().replace(['-', ' '], "_");
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == key || m.as_str().replace('_', "") == key.replace('_', ""))
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Csv { path: PathBuf, target: String },
    Artif(ArtifConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub name: String,
    pub source: DatasetSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    pub scheme: Scheme,
    pub c_list: Vec<f64>,
    pub q_list: Vec<f64>,
    /// Pecking repetitions per fit.
    pub reps: usize,
    /// Training fraction.
    pub split: f64,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    pub corr_threshold: f64,
    /// Features driving the non-SCAR propensity.
    pub propensity_vars: usize,
    /// Overrides the size-based replication count.
    pub replications: Option<usize>,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(datasets: Vec<DatasetSpec>) -> Self {
        Self {
            datasets,
            scheme: Scheme::NonScar,
            c_list: vec![0.3, 0.5, 0.8],
            q_list: vec![0.25, 0.5, 1.0],
            reps: 5,
            split: 0.7,
            methods: Method::ALL.to_vec(),
            master_seed: 0,
            corr_threshold: 0.9,
            propensity_vars: 1,
            replications: None,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.datasets.is_empty() {
            return bad("no datasets configured".into());
        }
        if self.methods.is_empty() {
            return bad("no methods configured".into());
        }
        if self.c_list.is_empty() || self.c_list.iter().any(|&c| !(c > 0.0 && c <= 1.0)) {
            return bad(format!("c_list must be a nonempty subset of (0, 1], got {:?}", self.c_list));
        }
        if self.methods.iter().any(Method::uses_q)
            && (self.q_list.is_empty() || self.q_list.iter().any(|&q| !(q > 0.0 && q <= 1.0)))
        {
            return bad(format!("q_list must be a nonempty subset of (0, 1], got {:?}", self.q_list));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return bad(format!("split must lie in (0, 1), got {}", self.split));
        }
        if self.reps == 0 {
            return bad("R must be at least 1".into());
        }
        if !(self.corr_threshold > 0.0 && self.corr_threshold <= 1.0) {
            return bad(format!("corr_threshold must lie in (0, 1], got {}", self.corr_threshold));
        }
        if self.replications == Some(0) {
            return bad("replications must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    name: Option<String>,
    path: Option<PathBuf>,
    target: Option<String>,
    kind: Option<String>,
    n: Option<usize>,
    p: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    datasets: Vec<RawDataset>,
    scheme: Option<String>,
    c_list: Option<Vec<f64>>,
    q_list: Option<Vec<f64>>,
    #[serde(rename = "R", alias = "r")]
    reps: Option<usize>,
    split: Option<f64>,
    methods: Option<Vec<String>>,
    master_seed: Option<u64>,
    corr_threshold: Option<f64>,
    propensity_vars: Option<usize>,
    replications: Option<usize>,
    threads: Option<usize>,
}

fn dataset_spec(raw: RawDataset, base: &Path) -> Result<DatasetSpec> {
    let kind = raw.kind.as_deref().unwrap_or("csv").to_ascii_lowercase();
    match kind.as_str() {
        "artif" => {
            let mut cfg = ArtifConfig::default();
            cfg.n = raw.n.unwrap_or(cfg.n);
            cfg.p = raw.p.unwrap_or(cfg.p);
            Ok(DatasetSpec {
                name: raw.name.unwrap_or_else(|| "artif".into()),
                source: DatasetSource::Artif(cfg),
            })
        }
        "csv" => {
            let path = raw
                .path
                .ok_or_else(|| Error::Config("csv dataset without `path`".into()))?;
            let path = if path.is_relative() { base.join(path) } else { path };
            let target = raw
                .target
                .ok_or_else(|| Error::Config(format!("dataset {} has no `target`", path.display())))?;
            let name = raw.name.unwrap_or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "dataset".into())
            });
            Ok(DatasetSpec {
                name,
                source: DatasetSource::Csv { path, target },
            })
        }
        other => Err(Error::Config(format!("unknown dataset kind `{other}`"))),
    }
}

/// Parse a TOML config. Relative dataset paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let datasets = raw
        .datasets
        .into_iter()
        .map(|d| dataset_spec(d, base))
        .collect::<Result<Vec<_>>>()?;
    let mut cfg = ExperimentConfig::new(datasets);
    if let Some(s) = raw.scheme {
        cfg.scheme = s.parse()?;
    }
    if let Some(methods) = raw.methods {
        cfg.methods = methods.iter().map(|m| m.parse()).collect::<Result<_>>()?;
        cfg.methods.sort();
        cfg.methods.dedup();
    }
    cfg.c_list = raw.c_list.unwrap_or(cfg.c_list);
    cfg.q_list = raw.q_list.unwrap_or(cfg.q_list);
    cfg.reps = raw.reps.unwrap_or(cfg.reps);
    cfg.split = raw.split.unwrap_or(cfg.split);
    cfg.master_seed = raw.master_seed.unwrap_or(cfg.master_seed);
    cfg.corr_threshold = raw.corr_threshold.unwrap_or(cfg.corr_threshold);
    cfg.propensity_vars = raw.propensity_vars.unwrap_or(cfg.propensity_vars);
    cfg.replications = raw.replications;
    cfg.threads = raw.threads;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}
