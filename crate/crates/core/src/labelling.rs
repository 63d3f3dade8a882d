//! Surrogate-label generators.
//!
//! Only true positives can be labeled. Under SCAR every positive is labeled
//! with the same probability `c`; under the non-SCAR scheme the labeling
//! probability of a positive grows with its values on the highest-variance
//! features, while the mean probability over positives is pinned to `c`.

use rand::Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Scar,
    NonScar,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Scar => "SCAR",
            Scheme::NonScar => "NONSCAR",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace(['-', '_'], "").as_str() {
            "SCAR" => Ok(Scheme::Scar),
            "NONSCAR" => Ok(Scheme::NonScar),
            other => Err(Error::Config(format!("unknown labelling scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateAssignment {
    pub s: Vec<u8>,
    /// Empirical `P(S = 1 | Y = 1)`.
    pub realized_c: f64,
    pub scheme: Scheme,
    pub seed: u64,
}

fn realized(s: &[u8], y: &[u8]) -> f64 {
    let n_pos = y.iter().filter(|&&v| v == 1).count();
    let n_lab = s.iter().filter(|&&v| v == 1).count();
    n_lab as f64 / n_pos as f64
}

pub fn scar_label(ds: &Dataset, c: f64, seed_: u64) -> Result<SurrogateAssignment> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidParameter(format!("c must lie in (0, 1], got {c}")));
    }
    if ds.n_positive() == 0 {
        return Err(Error::NoPositives);
    }
    let mut rng = seed::rng(seed_);
    let s: Vec<u8> = ds
        .y
        .iter()
        .map(|&y| u8::from(y == 1 && rng.random_bool(c)))
        .collect();
    Ok(SurrogateAssignment {
        realized_c: realized(&s, &ds.y),
        s,
        scheme: Scheme::Scar,
        seed: seed_,
    })
}

/// Labeling propensity per row (0 for negatives) for the non-SCAR scheme.
///
/// The score of a positive is the running sum of its selected-feature value
/// over all positives sorted by that value (ties share the score of their
/// group), so it increases with the feature. Scores are min-max normalized to
/// `z` with mean `m`, and mapped to `e = c + a (z - m)` with the steepest slope
/// `a` that keeps every propensity inside `[0, 1]`.
pub fn non_scar_propensity(ds: &Dataset, c_target: f64, n_vars: usize) -> Result<Vec<f64>> {
    if !(c_target > 0.0 && c_target < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "c_target must lie in (0, 1), got {c_target}"
        )));
    }
    if n_vars == 0 {
        return Err(Error::InvalidParameter("n_vars must be at least 1".into()));
    }
    let positives: Vec<usize> = (0..ds.n_rows()).filter(|&i| ds.y[i] == 1).collect();
    if positives.len() < 2 {
        return Err(Error::NoPositives);
    }

    let variance = |j: usize| {
        let col = ds.x.column(j);
        let m = col.mean();
        col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / col.len() as f64
    };
    let mut by_variance: Vec<(usize, f64)> = (0..ds.n_features()).map(|j| (j, variance(j))).collect();
    by_variance.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    // Features constant over the positives carry no ordering; skip to the next one.
    let selected: Vec<usize> = by_variance
        .iter()
        .map(|&(j, _)| j)
        .filter(|&j| {
            let first = ds.x[(positives[0], j)];
            positives.iter().any(|&i| ds.x[(i, j)] != first)
        })
        .take(n_vars)
        .collect();
    if selected.is_empty() {
        return Err(Error::NoUsableFeature);
    }

    let value: Vec<f64> = positives
        .iter()
        .map(|&i| selected.iter().map(|&j| ds.x[(i, j)]).sum())
        .collect();
    if value.iter().all(|&v| v == value[0]) {
        return Err(Error::NoUsableFeature);
    }
    let floor = value.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut order: Vec<usize> = (0..value.len()).collect();
    order.sort_by(|&a, &b| value[a].total_cmp(&value[b]).then(a.cmp(&b)));
    let mut score = vec![0.0; value.len()];
    let mut running = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && value[order[end]] == value[order[start]] {
            running += value[order[end]] - floor;
            end += 1;
        }
        for &k in &order[start..end] {
            score[k] = running;
        }
        start = end;
    }

    let (lo, hi) = score
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let z: Vec<f64> = score.iter().map(|&v| (v - lo) / (hi - lo)).collect();
    let m = z.iter().sum::<f64>() / z.len() as f64;
    let slope = (c_target / m).min((1.0 - c_target) / (1.0 - m));
    let mut e: Vec<f64> = z
        .iter()
        .map(|&zi| (c_target + slope * (zi - m)).clamp(0.0, 1.0))
        .collect();
    // One re-centering step after clipping.
    let shift = c_target - e.iter().sum::<f64>() / e.len() as f64;
    if shift != 0.0 {
        e.iter_mut().for_each(|v| *v = (*v + shift).clamp(0.0, 1.0));
    }

    let mut propensity = vec![0.0; ds.n_rows()];
    for (k, &i) in positives.iter().enumerate() {
        propensity[i] = e[k];
    }
    Ok(propensity)
}

pub fn non_scar_label(ds: &Dataset, c_target: f64, n_vars: usize, seed_: u64) -> Result<SurrogateAssignment> {
    let propensity = non_scar_propensity(ds, c_target, n_vars)?;
    let mut rng = seed::rng(seed_);
    let s: Vec<u8> = propensity
        .iter()
        .zip(&ds.y)
        .map(|(&e, &y)| u8::from(y == 1 && rng.random::<f64>() < e))
        .collect();
    Ok(SurrogateAssignment {
        realized_c: realized(&s, &ds.y),
        s,
        scheme: Scheme::NonScar,
        seed: seed_,
    })
}

/// Label an entire dataset under `scheme` at label frequency `c`.
pub fn assign(ds: &Dataset, scheme: Scheme, c: f64, n_vars: usize, seed_: u64) -> Result<SurrogateAssignment> {
    match scheme {
        Scheme::Scar => scar_label(ds, c, seed_),
        // c = 1 leaves nothing to select on: every positive gets labeled
        Scheme::NonScar if c >= 1.0 => scar_label(ds, 1.0, seed_).map(|mut a| {
            a.scheme = Scheme::NonScar;
            a
        }),
        Scheme::NonScar => non_scar_label(ds, c, n_vars, seed_),
    }
}

pub fn empirical_c(sa: &SurrogateAssignment, ds: &Dataset) -> Result<f64> {
    if sa.s.len() != ds.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: ds.n_rows(),
            got: sa.s.len(),
        });
    }
    if ds.n_positive() == 0 {
        return Err(Error::NoPositives);
    }
    Ok(realized(&sa.s, &ds.y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn toy(n: usize) -> Dataset {
        Dataset {
            x: DMatrix::from_fn(n, 2, |i, j| ((i * (j + 3)) % 17) as f64 / 16.0),
            y: (0..n).map(|i| u8::from(i % 3 != 0)).collect(),
            feature_names: vec!["a".into(), "b".into()],
        }
    }

    #[test]
    fn scar_full_frequency_labels_every_positive() {
        let ds = toy(60);
        let sa = scar_label(&ds, 1.0, 4).unwrap();
        assert_eq!(sa.s, ds.y);
        assert_eq!(sa.realized_c, 1.0);
        assert_eq!(empirical_c(&sa, &ds).unwrap(), 1.0);
    }

    #[test]
    fn negatives_never_labeled() {
        let ds = toy(300);
        for seed_ in 0..20 {
            let sa = scar_label(&ds, 0.5, seed_).unwrap();
            let ns = non_scar_label(&ds, 0.5, 1, seed_).unwrap();
            for i in 0..300 {
                assert!(sa.s[i] <= ds.y[i]);
                assert!(ns.s[i] <= ds.y[i]);
            }
        }
    }

    #[test]
    fn empirical_c_of_empty_labeling_is_zero() {
        let ds = toy(30);
        let sa = SurrogateAssignment {
            s: vec![0; 30],
            realized_c: 0.0,
            scheme: Scheme::Scar,
            seed: 0,
        };
        assert_eq!(empirical_c(&sa, &ds).unwrap(), 0.0);
    }

    #[test]
    fn propensity_mean_matches_target_and_is_monotone() {
        let ds = toy(500);
        for c in [0.1, 0.3, 0.5, 0.8, 0.95] {
            let e = non_scar_propensity(&ds, c, 1).unwrap();
            let pos: Vec<usize> = (0..500).filter(|&i| ds.y[i] == 1).collect();
            let mean = pos.iter().map(|&i| e[i]).sum::<f64>() / pos.len() as f64;
            assert!((mean - c).abs() < 1e-9, "c={c} mean={mean}");
            assert!(e.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn near_one_target_labels_everything() {
        let ds = toy(200);
        let e = non_scar_propensity(&ds, 1.0 - 1e-12, 1).unwrap();
        for i in 0..200 {
            if ds.y[i] == 1 {
                assert!(e[i] > 1.0 - 1e-9);
            }
        }
        let sa = non_scar_label(&ds, 1.0 - 1e-12, 1, 3).unwrap();
        assert_eq!(sa.s, ds.y);
    }

    #[test]
    fn constant_top_feature_falls_back() {
        // column 0 has the larger variance overall but is constant on positives
        let n = 400;
        let y: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
        let x = DMatrix::from_fn(n, 2, |i, j| {
            if j == 0 {
                if y[i] == 1 { 1.0 } else { 0.0 }
            } else {
                (i % 10) as f64 / 30.0
            }
        });
        let ds = Dataset {
            x,
            y,
            feature_names: vec!["flag".into(), "v".into()],
        };
        let sa = non_scar_label(&ds, 0.5, 1, 8).unwrap();
        assert!((sa.realized_c - 0.5).abs() < 0.1, "{}", sa.realized_c);

        let flat = Dataset {
            x: DMatrix::from_fn(n, 1, |i, _| f64::from(ds.y[i])),
            y: ds.y.clone(),
            feature_names: vec!["flag".into()],
        };
        assert!(matches!(non_scar_label(&flat, 0.5, 1, 8), Err(Error::NoUsableFeature)));
    }

    #[test]
    fn determinism_and_errors() {
        let ds = toy(100);
        assert_eq!(non_scar_label(&ds, 0.4, 1, 5).unwrap(), non_scar_label(&ds, 0.4, 1, 5).unwrap());
        assert_eq!(scar_label(&ds, 0.4, 5).unwrap(), scar_label(&ds, 0.4, 5).unwrap());
        assert!(scar_label(&ds, 0.0, 1).is_err());
        assert!(non_scar_label(&ds, 1.0, 1, 1).is_err());
        let none = Dataset {
            y: vec![0; 100],
            ..toy(100)
        };
        assert!(matches!(scar_label(&none, 0.5, 1), Err(Error::NoPositives)));
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("scar".parse::<Scheme>().unwrap(), Scheme::Scar);
        assert_eq!("non-scar".parse::<Scheme>().unwrap(), Scheme::NonScar);
        assert_eq!("NONSCAR".parse::<Scheme>().unwrap(), Scheme::NonScar);
        assert!("sar".parse::<Scheme>().is_err());
    }
}
