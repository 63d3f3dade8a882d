mod common;

use nalgebra::DMatrix;
use rand::Rng;

use common::*;
use puclust::cluster2::TwoMeansConfig;
use puclust::data::Dataset;
use puclust::glm::{cv_select_lambda, fit_joint, fit_logistic, lambda_grid, lambda_max, CvConfig, JointConfig, LogisticConfig};
use puclust::harness::{evaluate, stratified_split};
use puclust::labelling::{non_scar_label, scar_label};
use puclust::pecking::{aggregate_coefficients, peck_once, pecked_fits, PeckMode, PeckingConfig, RepFitter};
use puclust::seed;

fn labeled_dataset(n_pos: usize, n_neg: usize) -> Dataset {
    let n = n_pos + n_neg;
    Dataset {
        x: DMatrix::from_fn(n, 1, |i, _| i as f64 / n as f64),
        y: (0..n).map(|i| u8::from(i < n_pos)).collect(),
        feature_names: vec!["x".into()],
    }
}

#[test]
fn logistic_recovers_coefficient_at_large_n() {
    let (x, y) = logistic_data(5, 100_000, 0.0, &[1.0]);
    let fit = fit_logistic(&x, &y, &LogisticConfig::default()).unwrap();
    assert!((fit.coefficients.beta[0] - 1.0).abs() < 0.1, "{:?}", fit.coefficients);
}

#[test]
fn scar_frequency_concentrates() {
    let ds = labeled_dataset(10_000, 500);
    let c = scar_label(&ds, 0.5, 1).unwrap().realized_c;
    assert!((0.48..=0.52).contains(&c), "{c}");
    let ds = labeled_dataset(500, 500);
    let c = scar_label(&ds, 0.8, 2).unwrap().realized_c;
    assert!((0.74..=0.86).contains(&c), "{c}");
}

#[test]
fn non_scar_frequency_on_breastc() {
    let ds = breastc();
    let c = non_scar_label(&ds, 0.5, 1, 9).unwrap().realized_c;
    assert!((0.45..=0.55).contains(&c), "{c}");
}

#[test]
fn non_scar_labels_depend_on_the_top_variance_feature() {
    let ds = artif(21);
    let a = non_scar_label(&ds, 0.5, 1, 4).unwrap();
    let var = |j: usize| {
        let c = ds.x.column(j);
        let m = c.mean();
        c.iter().map(|v| (v - m).powi(2)).sum::<f64>()
    };
    let top = (0..ds.n_features()).max_by(|&a, &b| var(a).total_cmp(&var(b))).unwrap();
    let group = |lab: u8| -> Vec<f64> {
        (0..ds.n_rows())
            .filter(|&i| ds.y[i] == 1 && a.s[i] == lab)
            .map(|i| ds.x[(i, top)])
            .collect()
    };
    let (l, u) = (group(1), group(0));
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0))
    };
    let ((ml, vl), (mu, vu)) = (stats(&l), stats(&u));
    let t = (ml - mu) / (vl / l.len() as f64 + vu / u.len() as f64).sqrt();
    // two-sided p < 0.01 at these sample sizes
    assert!(t.abs() > 2.576, "Welch t = {t}");
}

#[test]
fn noise_features_pick_heavy_shrinkage() {
    let mut upper = 0;
    for s in 0..20 {
        let mut rng = seed::rng(1000 + s);
        let x = DMatrix::from_fn(200, 5, |_, _| rng.random::<f64>());
        let y: Vec<u8> = (0..200).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect();
        let sel = cv_select_lambda(&x, &y, &CvConfig::default(), s).unwrap();
        let nominal = lambda_grid(lambda_max(&x, &y).unwrap(), 100, 1e-4);
        if sel.lambda_min >= nominal[49] {
            upper += 1;
        }
    }
    assert!(upper >= 18, "{upper}/20 in the upper half");
}

#[test]
fn joint_fit_recovers_half_label_frequency() {
    let mut in_range = 0;
    for s in 0..20 {
        let (x, y) = logistic_data(500 + s, 5000, 0.0, &[3.0, -2.0]);
        let labels = scar_thin(&y, 0.5, 900 + s);
        let fit = fit_joint(&x, &labels, &JointConfig::default()).unwrap();
        let b = &fit.coefficients.beta;
        if (0.42..=0.58).contains(&fit.c_hat) && b[0] > 0.0 && b[1] < 0.0 {
            in_range += 1;
        }
    }
    assert!(in_range >= 18, "{in_range}/20");
}

#[test]
fn fully_labeled_blobs_are_cleaned_exactly() {
    let mut rng = seed::rng(6);
    let n = 60;
    let x = DMatrix::from_fn(n, 2, |i, _| if i < 30 { 0.0 } else { 10.0 } + rng.random::<f64>());
    let y: Vec<u8> = (0..n).map(|i| u8::from(i < 30)).collect();
    let cleaned = peck_once(&x, &y, 1.0, 3, &TwoMeansConfig::default()).unwrap();
    assert_eq!(cleaned.y_hat, y);
}

#[test]
fn one_blob_marks_the_seeded_cluster() {
    // unlabeled rows duplicate the labeled ones, so both live in one blob
    let base = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
    let values: Vec<f64> = base.iter().chain(base.iter()).copied().collect();
    let x = DMatrix::from_column_slice(values.len(), 1, &values);
    let s: Vec<u8> = (0..values.len()).map(|i| u8::from(i < base.len())).collect();
    let cleaned = peck_once(&x, &s, 1.0, 2, &TwoMeansConfig::default()).unwrap();
    assert!(!cleaned.cluster_pos_indices.is_empty());
    for i in 0..values.len() {
        let expected = s[i] == 1 || cleaned.cluster_pos_indices.contains(&i);
        assert_eq!(cleaned.y_hat[i] == 1, expected);
    }
}

#[test]
fn clust_beats_naive_on_artif_in_most_seeds() {
    let mut wins = 0;
    for s in 0..20 {
        let ds = artif(300 + s);
        let labels = non_scar_label(&ds, 0.5, 1, 40 + s).unwrap().s;
        let (train, test) = stratified_split(&labels, 0.7, 80 + s);
        let x_train = ds.x.select_rows(&train);
        let s_train: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
        let x_test = ds.x.select_rows(&test);
        let y_test: Vec<u8> = test.iter().map(|&i| ds.y[i]).collect();

        let naive = fit_logistic(&x_train, &s_train, &LogisticConfig::default()).unwrap().coefficients;
        let reps = pecked_fits(&x_train, &s_train, 1.0, 5, RepFitter::Logistic, &PeckingConfig::default(), s).unwrap();
        let clust = aggregate_coefficients(&reps, PeckMode::Clust).unwrap();
        let acc = |c| evaluate(&x_test, &y_test, c).unwrap().0;
        eprintln!("seed {s}: clust {:.3} naive {:.3}", acc(&clust), acc(&naive));
        if acc(&clust) >= acc(&naive) {
            wins += 1;
        }
    }
    assert!(wins > 10, "clust won {wins}/20");
}
