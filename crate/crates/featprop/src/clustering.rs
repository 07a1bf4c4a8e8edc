//! Clustering routines behind the selection strategies: Lloyd's K-Means with
//! k-means++ seeding, the approximate K-Medoids used for selection (K-Means
//! followed by snapping centroids to real nodes), greedy K-Center
//! (farthest-first traversal), and the two pool objectives they optimize.
//!
//! Everything is deterministic given the seed; all ties break toward the
//! lowest node index or the lowest center rank.

use crate::graph::NodeSet;
use crate::propagation::{min_distances_to_set, row_distance, PropagatedFeatures, PropagationError};
use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use thiserror::Error;

/// Default Lloyd iteration cap.
pub const KMEANS_MAX_ITER: usize = 300;
/// Default relative centroid-movement tolerance.
pub const KMEANS_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("requested {requested} centers but only {available} {kind} available")]
    Infeasible {
        requested: usize,
        available: usize,
        kind: &'static str,
    },
    #[error("center set must not be empty")]
    EmptySet,
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

/// Cluster centers: real node indices (medoid / center methods) or free
/// centroid vectors (K-Means).
#[derive(Debug, Clone, PartialEq)]
pub enum Centers {
    Nodes(Vec<usize>),
    Centroids(Array2<f64>),
}

impl Centers {
    /// Node indices, when the centers are real nodes.
    pub fn nodes(&self) -> Option<&[usize]> {
        match self {
            Centers::Nodes(v) => Some(v),
            Centers::Centroids(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub centers: Centers,
    /// Cluster id of every point: index of its nearest center, ties broken
    /// by lowest center rank.
    pub assignment: Vec<usize>,
    /// K-Means / K-Medoids: mean point-to-center distance.
    /// K-Center: the cover radius (max point-to-center distance).
    pub objective: f64,
    /// Lloyd objective (mean squared distance) recorded at every assignment
    /// step; non-increasing. Empty for methods that do not run Lloyd.
    pub lloyd_trace: Vec<f64>,
}

fn squared_row_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Squared distances from every point to every center via the expansion
/// `|x - c|^2 = |x|^2 - 2 x.c + |c|^2` (one dense matmul), clamped at zero.
fn squared_distances(points: &ArrayView2<f64>, centers: &ArrayView2<f64>) -> Array2<f64> {
    let point_norms: Vec<f64> = points.rows().into_iter().map(|r| r.dot(&r)).collect();
    let center_norms: Vec<f64> = centers.rows().into_iter().map(|r| r.dot(&r)).collect();
    let mut out = points.dot(&centers.t());
    for ((i, k), v) in out.indexed_iter_mut() {
        *v = (point_norms[i] - 2.0 * *v + center_norms[k]).max(0.0);
    }
    out
}

/// Per-row argmin with ties to the lowest column; returns (index, value).
fn nearest_center(distances_row: ArrayView1<'_, f64>) -> (usize, f64) {
    let mut best_k = 0usize;
    let mut best = distances_row[0];
    for (k, &v) in distances_row.iter().enumerate().skip(1) {
        if v < best {
            best = v;
            best_k = k;
        }
    }
    (best_k, best)
}

fn count_distinct_rows(points: &ArrayView2<f64>) -> usize {
    let n = points.nrows();
    if n == 0 {
        return 0;
    }
    let cmp_rows = |a: usize, b: usize| -> Ordering {
        for (x, y) in points.row(a).iter().zip(points.row(b).iter()) {
            match x.total_cmp(y) {
                Ordering::Equal => continue,
                other => return other,
            }
        }
        Ordering::Equal
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_unstable_by(|&a, &b| cmp_rows(a, b));
    1 + idx
        .windows(2)
        .filter(|w| cmp_rows(w[0], w[1]) != Ordering::Equal)
        .count()
}

/// k-means++ seeding: first center uniform, each next sampled with
/// probability proportional to the squared distance to the nearest chosen
/// center.
fn kmeanspp_init(points: &ArrayView2<f64>, b: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let d = points.ncols();
    let mut centroids = Array2::<f64>::zeros((b, d));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut dist2: Vec<f64> = (0..n)
        .map(|i| squared_row_distance(points.row(i), points.row(first)))
        .collect();
    for k in 1..b {
        let total: f64 = dist2.iter().sum();
        debug_assert!(total > 0.0, "caller guarantees b <= distinct rows");
        let mut r = rng.random::<f64>() * total;
        let mut pick = None;
        let mut last_positive = None;
        for (i, &w) in dist2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            last_positive = Some(i);
            if r < w {
                pick = Some(i);
                break;
            }
            r -= w;
        }
        let pick = pick.or(last_positive).expect("positive total weight");
        centroids.row_mut(k).assign(&points.row(pick));
        for (i, slot) in dist2.iter_mut().enumerate() {
            let d2 = squared_row_distance(points.row(i), points.row(pick));
            if d2 < *slot {
                *slot = d2;
            }
        }
    }
    centroids
}

/// Lloyd's algorithm with k-means++ initialization.
///
/// Stops when the relative centroid movement drops below `tol` (movement
/// measured as the largest per-centroid shift over the largest centroid
/// norm), when the assignment stabilizes, or after `max_iter` iterations.
/// Empty clusters are reseeded at the point farthest from its assigned
/// centroid. The reported objective is the mean point-to-centroid distance;
/// `lloyd_trace` records the internal mean squared distance per iteration.
pub fn kmeans(
    points: &ArrayView2<f64>,
    b: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<ClusterResult, ClusterError> {
    if b == 0 {
        return Err(ClusterError::InvalidArgument("b must be at least 1".into()));
    }
    if max_iter == 0 {
        return Err(ClusterError::InvalidArgument("max_iter must be at least 1".into()));
    }
    let n = points.nrows();
    let d = points.ncols();
    let distinct = count_distinct_rows(points);
    if b > distinct {
        return Err(ClusterError::Infeasible {
            requested: b,
            available: distinct,
            kind: "distinct points",
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeanspp_init(points, b, &mut rng);
    let mut assignment = vec![0usize; n];
    let mut trace = Vec::new();

    for iter in 0..max_iter {
        let dist2 = squared_distances(points, &centroids.view());
        let mut changed = false;
        let mut best_dist = vec![0.0f64; n];
        let mut total_sq = 0.0;
        for i in 0..n {
            let (k, v) = nearest_center(dist2.row(i));
            best_dist[i] = v;
            total_sq += v;
            if assignment[i] != k {
                assignment[i] = k;
                changed = true;
            }
        }
        trace.push(total_sq / n as f64);

        let mut sums = Array2::<f64>::zeros((b, d));
        let mut counts = vec![0usize; b];
        for i in 0..n {
            sums.row_mut(assignment[i]).scaled_add(1.0, &points.row(i));
            counts[assignment[i]] += 1;
        }
        let empties: Vec<usize> = (0..b).filter(|&k| counts[k] == 0).collect();
        let mut new_centroids = Array2::<f64>::zeros((b, d));
        for k in 0..b {
            if counts[k] > 0 {
                let inv = 1.0 / counts[k] as f64;
                new_centroids
                    .row_mut(k)
                    .assign(&sums.row(k).mapv(|v| v * inv));
            }
        }
        if !empties.is_empty() {
            // Reseed each empty cluster at the farthest unclaimed point.
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_unstable_by(|&a, &c| {
                best_dist[c].total_cmp(&best_dist[a]).then(a.cmp(&c))
            });
            for (slot, &k) in empties.iter().enumerate() {
                new_centroids.row_mut(k).assign(&points.row(order[slot]));
            }
        }

        let mut shift: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for k in 0..b {
            shift = shift.max(row_distance(new_centroids.row(k), centroids.row(k)));
            scale = scale.max(new_centroids.row(k).dot(&new_centroids.row(k)).sqrt());
        }
        centroids = new_centroids;
        let stable_assignment = !changed && iter > 0 && empties.is_empty();
        let converged = if scale > 0.0 { shift / scale < tol } else { shift == 0.0 };
        if stable_assignment || converged {
            break;
        }
    }

    // Final assignment against the final centroids.
    let dist2 = squared_distances(points, &centroids.view());
    let mut total_sq = 0.0;
    let mut total = 0.0;
    for i in 0..n {
        let (k, v) = nearest_center(dist2.row(i));
        assignment[i] = k;
        total_sq += v;
        total += v.sqrt();
    }
    trace.push(total_sq / n as f64);

    Ok(ClusterResult {
        centers: Centers::Centroids(centroids),
        assignment,
        objective: total / n as f64,
        lloyd_trace: trace,
    })
}

/// Approximate K-Medoids: run K-Means to convergence, then snap every
/// centroid to the nearest real node. Ties go to the lowest node index;
/// a node can serve as at most one medoid (the next-nearest unused node
/// repairs duplicates, which also covers inputs with fewer distinct rows
/// than `b`). The objective is the mean distance to the nearest medoid.
pub fn kmedoids_approx(
    p: &PropagatedFeatures,
    b: usize,
    seed: u64,
) -> Result<ClusterResult, ClusterError> {
    kmedoids_approx_excluding(p, b, seed, &NodeSet::new())
}

/// [`kmedoids_approx`] with a set of nodes that must not become medoids
/// (used to keep already-labeled nodes out of a fresh selection).
pub fn kmedoids_approx_excluding(
    p: &PropagatedFeatures,
    b: usize,
    seed: u64,
    forbidden: &NodeSet,
) -> Result<ClusterResult, ClusterError> {
    let n = p.n_nodes();
    if b == 0 {
        return Err(ClusterError::InvalidArgument("b must be at least 1".into()));
    }
    if let Some(&bad) = forbidden.iter().find(|&&f| f >= n) {
        return Err(ClusterError::InvalidArgument(format!(
            "forbidden node {bad} out of range for {n} nodes"
        )));
    }
    let available = n - forbidden.len();
    if b > available {
        return Err(ClusterError::Infeasible {
            requested: b,
            available,
            kind: "selectable nodes",
        });
    }

    let points = p.matrix().view();
    let distinct = count_distinct_rows(&points);
    let b_means = b.min(distinct);
    let km = kmeans(&points, b_means, seed, KMEANS_MAX_ITER, KMEANS_TOL)?;
    let centroids = match &km.centers {
        Centers::Centroids(c) => c.clone(),
        Centers::Nodes(_) => unreachable!("kmeans returns centroids"),
    };

    let dist2 = squared_distances(&points, &centroids.view());
    let mut used = vec![false; n];
    for &f in forbidden {
        used[f] = true;
    }
    let mut medoids: Vec<usize> = Vec::with_capacity(b);
    let snap_nearest_unused = |col: usize, used: &mut Vec<bool>| -> usize {
        let column = dist2.column(col);
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n {
            if used[i] {
                continue;
            }
            if best.map_or(true, |(bv, _)| column[i] < bv) {
                best = Some((column[i], i));
            }
        }
        let (_, i) = best.expect("b <= available leaves an unused node");
        used[i] = true;
        i
    };
    for k in 0..b_means {
        medoids.push(snap_nearest_unused(k, &mut used));
    }
    let mut wrap = 0usize;
    while medoids.len() < b {
        medoids.push(snap_nearest_unused(wrap % b_means, &mut used));
        wrap += 1;
    }

    let medoid_rows = gather_rows(&points, &medoids);
    let dist2 = squared_distances(&points, &medoid_rows.view());
    let mut assignment = vec![0usize; n];
    let mut total = 0.0;
    for i in 0..n {
        let (k, v) = nearest_center(dist2.row(i));
        assignment[i] = k;
        total += v.sqrt();
    }

    Ok(ClusterResult {
        centers: Centers::Nodes(medoids),
        assignment,
        objective: total / n as f64,
        lloyd_trace: km.lloyd_trace,
    })
}

fn gather_rows(points: &ArrayView2<f64>, rows: &[usize]) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((rows.len(), points.ncols()));
    for (slot, &i) in rows.iter().enumerate() {
        out.row_mut(slot).assign(&points.row(i));
    }
    out
}

/// Greedy K-Center (farthest-first traversal): starting from `initial`,
/// repeatedly add the node farthest from all current centers until `b` new
/// centers have been added. If `initial` is empty the first of the `b`
/// centers is drawn uniformly by `seed`.
///
/// The returned center list is `initial` (ascending) followed by the added
/// nodes in selection order; the objective is the final cover radius.
pub fn kcenter_greedy(
    p: &PropagatedFeatures,
    initial: &NodeSet,
    b: usize,
    seed: u64,
) -> Result<ClusterResult, ClusterError> {
    let n = p.n_nodes();
    if let Some(&bad) = initial.iter().find(|&&f| f >= n) {
        return Err(ClusterError::InvalidArgument(format!(
            "initial center {bad} out of range for {n} nodes"
        )));
    }
    if initial.is_empty() && b == 0 {
        return Err(ClusterError::EmptySet);
    }
    if b + initial.len() > n {
        return Err(ClusterError::Infeasible {
            requested: b + initial.len(),
            available: n,
            kind: "nodes",
        });
    }

    let mut centers: Vec<usize> = Vec::with_capacity(initial.len() + b);
    let mut is_center = vec![false; n];
    let mut min_dist = vec![f64::INFINITY; n];
    let mut assignment = vec![0usize; n];

    let add_center = |c: usize,
                          centers: &mut Vec<usize>,
                          is_center: &mut Vec<bool>,
                          min_dist: &mut Vec<f64>,
                          assignment: &mut Vec<usize>| {
        let rank = centers.len();
        centers.push(c);
        is_center[c] = true;
        let center_row = p.row(c);
        for i in 0..n {
            let d = row_distance(p.row(i), center_row);
            if d < min_dist[i] {
                min_dist[i] = d;
                assignment[i] = rank;
            }
        }
    };

    for &c in initial {
        add_center(c, &mut centers, &mut is_center, &mut min_dist, &mut assignment);
    }

    let mut to_add = b;
    if centers.is_empty() {
        let first = ChaCha8Rng::seed_from_u64(seed).random_range(0..n);
        add_center(first, &mut centers, &mut is_center, &mut min_dist, &mut assignment);
        to_add -= 1;
    }
    for _ in 0..to_add {
        let mut best: Option<(f64, usize)> = None;
        for (i, &d) in min_dist.iter().enumerate() {
            if is_center[i] {
                continue;
            }
            if best.map_or(true, |(bv, _)| d > bv) {
                best = Some((d, i));
            }
        }
        let (_, pick) = best.expect("b + |initial| <= n leaves a non-center");
        add_center(pick, &mut centers, &mut is_center, &mut min_dist, &mut assignment);
    }

    let objective = min_dist.iter().copied().fold(0.0f64, f64::max);
    Ok(ClusterResult {
        centers: Centers::Nodes(centers),
        assignment,
        objective,
        lloyd_trace: Vec::new(),
    })
}

/// Mean distance from every node to its nearest node in `s`.
pub fn kmedoids_objective(p: &PropagatedFeatures, s: &NodeSet) -> Result<f64, ClusterError> {
    let dists = min_distances_to_set(p, s)?;
    Ok(dists.iter().sum::<f64>() / dists.len() as f64)
}

/// Max distance from any node to its nearest node in `s` (the cover radius).
pub fn kcenter_objective(p: &PropagatedFeatures, s: &NodeSet) -> Result<f64, ClusterError> {
    let dists = min_distances_to_set(p, s)?;
    Ok(dists.iter().copied().fold(0.0f64, f64::max))
}
