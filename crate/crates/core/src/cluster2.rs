//! Two-means clustering: k-means++ seeding, Lloyd iterations, then single-point
//! (Hartigan) transfers.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoMeansConfig {
    pub n_restarts: usize,
    pub max_iter: usize,
    /// Convergence threshold on total centroid movement.
    pub tol: f64,
}

impl Default for TwoMeansConfig {
    fn default() -> Self {
        Self {
            n_restarts: 5,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster (0 or 1) of every input row.
    pub assignment: Vec<u8>,
    /// `2 x p`, one centroid per row.
    pub centroids: DMatrix<f64>,
    pub within_sse: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Clustering {
    pub fn cluster_sizes(&self) -> [usize; 2] {
        let ones = self.assignment.iter().filter(|&&a| a == 1).count();
        [self.assignment.len() - ones, ones]
    }
}

fn sq_dist_to(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>, k: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(centroids.row(k).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Within-cluster sum of squared distances to the given centroids.
pub fn sse(points: &DMatrix<f64>, assignment: &[u8], centroids: &DMatrix<f64>) -> f64 {
    (0..points.nrows())
        .map(|i| sq_dist_to(points, i, centroids, assignment[i] as usize))
        .sum()
}

fn centroids_of(points: &DMatrix<f64>, assignment: &[u8]) -> DMatrix<f64> {
    let p = points.ncols();
    let mut c = DMatrix::zeros(2, p);
    let mut counts = [0usize; 2];
    for (i, &a) in assignment.iter().enumerate() {
        counts[a as usize] += 1;
        for j in 0..p {
            c[(a as usize, j)] += points[(i, j)];
        }
    }
    for k in 0..2 {
        if counts[k] > 0 {
            for j in 0..p {
                c[(k, j)] /= counts[k] as f64;
            }
        }
    }
    c
}

fn assign(points: &DMatrix<f64>, centroids: &DMatrix<f64>) -> Vec<u8> {
    (0..points.nrows())
        .map(|i| u8::from(sq_dist_to(points, i, centroids, 1) < sq_dist_to(points, i, centroids, 0)))
        .collect()
}

/// Move the point farthest from its centroid into an empty cluster.
fn repair_empty(points: &DMatrix<f64>, assignment: &mut [u8], centroids: &DMatrix<f64>) -> bool {
    let ones = assignment.iter().filter(|&&a| a == 1).count();
    let empty = match ones {
        0 => 1u8,
        n if n == assignment.len() => 0u8,
        _ => return false,
    };
    let far = (0..points.nrows())
        .max_by(|&a, &b| {
            let da = sq_dist_to(points, a, centroids, assignment[a] as usize);
            let db = sq_dist_to(points, b, centroids, assignment[b] as usize);
            da.total_cmp(&db).then(b.cmp(&a))
        })
        .expect("nonempty");
    assignment[far] = empty;
    true
}

fn plus_plus_init(points: &DMatrix<f64>, rng: &mut impl Rng) -> DMatrix<f64> {
    let m = points.nrows();
    let first = rng.random_range(0..m);
    let d2: Vec<f64> = (0..m)
        .map(|i| {
            points
                .row(i)
                .iter()
                .zip(points.row(first).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        })
        .collect();
    let total: f64 = d2.iter().sum();
    let mut target = rng.random::<f64>() * total;
    let mut second = m - 1;
    for (i, &d) in d2.iter().enumerate() {
        if d > 0.0 && target < d {
            second = i;
            break;
        }
        target -= d;
    }
    if d2[second] == 0.0 {
        // rounding pushed us past the end; take the last point at positive distance
        second = (0..m).rev().find(|&i| d2[i] > 0.0).expect("two distinct points");
    }
    let mut c = DMatrix::zeros(2, points.ncols());
    c.row_mut(0).copy_from(&points.row(first));
    c.row_mut(1).copy_from(&points.row(second));
    c
}

/// Single-point transfers (Hartigan): move a point whenever that lowers the SSE,
/// counting the centroid shift the move causes. Escapes Lloyd fixed points
/// that are not local optima of the partition problem.
fn hartigan_refine(points: &DMatrix<f64>, assignment: &mut [u8], centroids: &mut DMatrix<f64>, trace: &mut Vec<f64>) {
    let m = points.nrows();
    let mut sizes = [0usize; 2];
    for &a in assignment.iter() {
        sizes[a as usize] += 1;
    }
    // bounded for safety; every transfer strictly lowers the SSE
    for _ in 0..100 {
        let mut moved = false;
        for i in 0..m {
            let from = assignment[i] as usize;
            let to = 1 - from;
            if sizes[from] < 2 {
                continue;
            }
            let (nf, nt) = (sizes[from] as f64, sizes[to] as f64);
            let gain = nf / (nf - 1.0) * sq_dist_to(points, i, centroids, from);
            let cost = nt / (nt + 1.0) * sq_dist_to(points, i, centroids, to);
            if cost < gain * (1.0 - 1e-12) {
                for j in 0..points.ncols() {
                    let v = points[(i, j)];
                    centroids[(from, j)] = (centroids[(from, j)] * nf - v) / (nf - 1.0);
                    centroids[(to, j)] = (centroids[(to, j)] * nt + v) / (nt + 1.0);
                }
                sizes[from] -= 1;
                sizes[to] += 1;
                assignment[i] = to as u8;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        // recompute exactly to shed the drift of the incremental updates
        *centroids = centroids_of(points, assignment);
        trace.push(sse(points, assignment, centroids));
    }
}

/// One Lloyd run from k-means++ seeding, then Hartigan transfers. Also returns the SSE after every iteration.
fn lloyd(points: &DMatrix<f64>, cfg: &TwoMeansConfig, rng: &mut impl Rng) -> (Clustering, Vec<f64>) {
    let mut centroids = plus_plus_init(points, rng);
    let mut assignment = assign(points, &centroids);
    repair_empty(points, &mut assignment, &centroids);
    let mut sse_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let next_centroids = centroids_of(points, &assignment);
        let movement: f64 = (&next_centroids - &centroids).iter().map(|v| v * v).sum::<f64>().sqrt();
        centroids = next_centroids;
        sse_trace.push(sse(points, &assignment, &centroids));

        let mut next = assign(points, &centroids);
        if repair_empty(points, &mut next, &centroids) {
            centroids = centroids_of(points, &next);
        }
        let stable = next == assignment;
        assignment = next;
        if stable || movement < cfg.tol {
            converged = true;
            break;
        }
    }
    let mut centroids = centroids_of(points, &assignment);
    sse_trace.push(sse(points, &assignment, &centroids));
    hartigan_refine(points, &mut assignment, &mut centroids, &mut sse_trace);
    let within_sse = sse(points, &assignment, &centroids);
    (
        Clustering {
            assignment,
            centroids,
            within_sse,
            iterations,
            converged,
        },
        sse_trace,
    )
}

fn validate(points: &DMatrix<f64>) -> Result<()> {
    let m = points.nrows();
    if m < 2 {
        return Err(Error::TooFewPoints(m));
    }
    if (1..m).all(|i| points.row(i) == points.row(0)) {
        return Err(Error::IdenticalPoints);
    }
    Ok(())
}

/// Row permutation sorting the points lexicographically. Seeding on this order
/// makes the result independent of how the caller ordered the rows.
fn canonical_order(points: &DMatrix<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.nrows()).collect();
    order.sort_by(|&a, &b| {
        points
            .row(a)
            .iter()
            .zip(points.row(b).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    order
}

pub(crate) fn two_means_traced(
    points: &DMatrix<f64>,
    seed_: u64,
    cfg: &TwoMeansConfig,
) -> Result<(Clustering, Vec<Vec<f64>>)> {
    validate(points)?;
    let order = canonical_order(points);
    let sorted = points.select_rows(&order);
    let (mut best, traces) = best_of_restarts(&sorted, seed_, cfg);
    let mut assignment = vec![0; order.len()];
    for (k, &i) in order.iter().enumerate() {
        assignment[i] = best.assignment[k];
    }
    best.assignment = assignment;
    Ok((best, traces))
}

fn best_of_restarts(points: &DMatrix<f64>, seed_: u64, cfg: &TwoMeansConfig) -> (Clustering, Vec<Vec<f64>>) {
    let mut best: Option<Clustering> = None;
    let mut traces = Vec::with_capacity(cfg.n_restarts.max(1));
    for restart in 0..cfg.n_restarts.max(1) {
        let mut rng = seed::rng(seed::derive(seed_, &[restart as u64]));
        let (run, trace) = lloyd(points, cfg, &mut rng);
        traces.push(trace);
        // strict comparison: ties keep the lowest restart index
        if best.as_ref().is_none_or(|b| run.within_sse < b.within_sse) {
            best = Some(run);
        }
    }
    (best.expect("at least one restart"), traces)
}

/// Best-of-restarts 2-means partition of the rows of `points`.
pub fn two_means(points: &DMatrix<f64>, seed_: u64, cfg: &TwoMeansConfig) -> Result<Clustering> {
    two_means_traced(points, seed_, cfg).map(|(c, _)| c)
}
