use nalgebra::{DMatrix, DVector};

/// `[1 X]' diag(w) [1 X]`, the weighted Gram matrix of the design with intercept.
pub(crate) fn weighted_gram(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let p = x.ncols();
    let mut g = DMatrix::zeros(p + 1, p + 1);
    g[(0, 0)] = w.iter().sum();
    for j in 0..p {
        let cj = x.column(j);
        let s: f64 = cj.iter().zip(w).map(|(v, w)| v * w).sum();
        g[(0, j + 1)] = s;
        g[(j + 1, 0)] = s;
        for k in 0..=j {
            let ck = x.column(k);
            let s: f64 = cj
                .iter()
                .zip(ck.iter())
                .zip(w)
                .map(|((a, b), w)| a * b * w)
                .sum();
            g[(j + 1, k + 1)] = s;
            g[(k + 1, j + 1)] = s;
        }
    }
    g
}

/// `[1 X]' r`.
pub(crate) fn design_transpose_times(x: &DMatrix<f64>, r: &[f64]) -> DVector<f64> {
    let mut out = DVector::zeros(x.ncols() + 1);
    out[0] = r.iter().sum();
    for (j, col) in x.column_iter().enumerate() {
        out[j + 1] = col.iter().zip(r).map(|(v, r)| v * r).sum();
    }
    out
}

/// Solve `a z = b` for symmetric positive (semi)definite `a`, adding a growing
/// ridge to the diagonal until the Cholesky factorization succeeds.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = a.clone().cholesky() {
        return ch.solve(b);
    }
    let scale = a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut jitter = 1e-12 * scale;
    loop {
        let mut reg = a.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += jitter;
        }
        if let Some(ch) = reg.cholesky() {
            return ch.solve(b);
        }
        jitter *= 10.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_matches_explicit_product() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.5, -1.0, 3.0, 0.0]);
        let w = [1.0, 2.0, 0.5];
        let design = DMatrix::from_fn(3, 3, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
        let wd = DMatrix::from_diagonal(&DVector::from_row_slice(&w));
        let expected = design.transpose() * wd * &design;
        assert!((weighted_gram(&x, &w) - expected).abs().max() < 1e-12);
    }

    #[test]
    fn singular_system_still_solves() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_row_slice(&[2.0, 2.0]);
        let z = solve_spd(&a, &b);
        assert!(((&a * &z) - &b).norm() < 1e-3);
    }
}
