mod common;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use common::*;
use puclust::cluster2::{two_means, TwoMeansConfig};
use puclust::glm::{
    empirical_risk, fit_lasso, fit_logistic, risk_gradient, sigmoid, Coefficients, LassoConfig, LogisticConfig,
};
use puclust::metrics::auc;
use puclust::seed;

#[test]
fn logistic_matches_grid_search() {
    for s in 0..3 {
        let (xs, ys) = small_logistic_instance(s, 50);
        let x = DMatrix::from_column_slice(50, 1, &xs);
        let fit = fit_logistic(&x, &ys, &LogisticConfig::default()).unwrap();
        let c = &fit.coefficients;
        assert!(c.intercept.abs() < 4.9 && c.beta[0].abs() < 4.9, "MLE outside the grid box");
        let ours = logistic_loglik(&xs, &ys, c.intercept, c.beta[0]);
        let grid = grid_search_loglik(&xs, &ys);
        assert!(ours >= grid - 1e-9, "solver below the grid optimum");
        assert!(ours - grid < 1e-3, "seed {s}: {ours} vs {grid}");
    }
}

#[test]
fn zero_penalty_lasso_equals_logistic() {
    let (x, y) = logistic_data(11, 100, 0.3, &[1.0, -0.5, 0.25]);
    let lasso = fit_lasso(&x, &y, 0.0, &LassoConfig::default()).unwrap().coefficients;
    let mle = fit_logistic(&x, &y, &LogisticConfig::default()).unwrap().coefficients;
    assert!((lasso.intercept - mle.intercept).abs() < 1e-4);
    for (a, b) in lasso.beta.iter().zip(&mle.beta) {
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
}

#[test]
fn lasso_satisfies_kkt_conditions() {
    for s in 0..5 {
        let (x, y) = logistic_data(100 + s, 150, 0.0, &[1.5, 0.0, -1.0, 0.3, 0.0]);
        for lambda in [0.002, 0.02, 0.08] {
            let fit = fit_lasso(&x, &y, lambda, &LassoConfig::default()).unwrap();
            let v = kkt_violation(&x, &y, &fit.coefficients, lambda);
            assert!(v <= 1e-4, "seed {s}, lambda {lambda}: violation {v}");
        }
    }
}

#[test]
fn risk_gradient_matches_central_differences() {
    let mut rng = seed::rng(8);
    for point in 0..10 {
        let p = 1 + point % 5;
        let x = DMatrix::from_fn(200, p, |_, _| StandardNormal.sample(&mut rng));
        let y: Vec<u8> = (0..200).map(|_| u8::from(rng.random::<f64>() < 0.4)).collect();
        let coef = Coefficients {
            intercept: rng.random_range(-1.0..1.0),
            beta: (0..p).map(|_| rng.random_range(-1.0..1.0)).collect(),
            lambda: None,
        };
        let grad = risk_gradient(&x, &y, &coef).unwrap();
        let h = 1e-5;
        for k in 0..=p {
            let shifted = |d: f64| {
                let mut c = coef.clone();
                if k == 0 {
                    c.intercept += d;
                } else {
                    c.beta[k - 1] += d;
                }
                empirical_risk(&x, &y, &c).unwrap()
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            let rel = (fd - grad[k]).abs() / grad[k].abs().max(1e-6);
            assert!(rel < 1e-5, "point {point}, coordinate {k}: {fd} vs {}", grad[k]);
        }
    }
}

#[test]
fn eight_points_match_exhaustive_partition() {
    let mut rng = seed::rng(31);
    for _ in 0..10 {
        let pts: Vec<Vec<f64>> = (0..8).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let c = two_means(&to_matrix(&pts), 5, &TwoMeansConfig::default()).unwrap();
        let optimum = brute_force_two_partition(&pts);
        assert!((c.within_sse - optimum).abs() < 1e-10, "{} vs {optimum}", c.within_sse);
    }
}

#[test]
fn auc_matches_pair_count_with_ties() {
    let mut rng = seed::rng(3);
    for _ in 0..50 {
        let y: Vec<u8> = (0..30).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect();
        if y.iter().all(|&v| v == y[0]) {
            continue;
        }
        // coarse scores so that ties are common
        let s: Vec<f64> = (0..30).map(|_| (rng.random::<f64>() * 6.0).floor()).collect();
        assert!((auc(&y, &s).unwrap() - pair_count_auc(&y, &s)).abs() < 1e-12);
    }
}

#[test]
fn posterior_is_sigmoid_of_linear_predictor() {
    let coef = Coefficients {
        intercept: -0.5,
        beta: vec![2.0, 0.0],
        lambda: None,
    };
    let x = DMatrix::from_row_slice(2, 2, &[0.25, 9.0, 1.0, -3.0]);
    let post = puclust::glm::predict_posterior(&coef, &x).unwrap();
    assert!((post[0] - 0.5).abs() < 1e-15);
    assert!((post[1] - sigmoid(1.5)).abs() < 1e-15);
}
