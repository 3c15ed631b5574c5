use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_matrix, sq_dist};
use crate::util::rng_for;
use crate::{Error, Result};

pub const MAX_LLOYD_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub k: usize,
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to the assigned centroid.
    pub inertia: f64,
    /// Inertia after each Lloyd iteration of the winning restart.
    pub history: Vec<f64>,
}

/// k-means++ seeding followed by Lloyd iterations; keeps the restart with the
/// lowest inertia (earliest on ties).
pub fn kmeans(x: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<ClusterAssignment> {
    check_matrix(x, "kmeans")?;
    if k == 0 || k > x.len() {
        return Err(Error::Argument(format!("k = {k} with {} points", x.len())));
    }
    let mut best: Option<ClusterAssignment> = None;
    for r in 0..restarts.max(1) {
        let run = lloyd(x, k, seed, r);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn seed_centroids(x: &[Vec<f64>], k: usize, seed: u64, restart: usize) -> Vec<Vec<f64>> {
    let mut rng = rng_for(seed, &format!("kmeans/{restart}"));
    let n = x.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = x.iter().map(|p| sq_dist(p, &x[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && r < w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            while d2[pick] == 0.0 {
                pick -= 1;
            }
            pick
        } else {
            // all remaining points coincide with a centre
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (d, p) in d2.iter_mut().zip(x) {
            *d = d.min(sq_dist(p, &x[next]));
        }
    }
    chosen.into_iter().map(|i| x[i].clone()).collect()
}

fn update_centroids(x: &[Vec<f64>], labels: &mut [usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    let dim = x[0].len();
    let mut counts = vec![0usize; k];
    let mut sums = vec![vec![0.0; dim]; k];
    for (p, &l) in x.iter().zip(labels.iter()) {
        counts[l] += 1;
        sums[l].iter_mut().zip(p).for_each(|(s, v)| *s += v);
    }
    // an empty cluster takes over the point farthest from its own centre
    // (never the last member of a cluster)
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let far = (0..x.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| {
                sq_dist(&x[a], &centroids[labels[a]])
                    .total_cmp(&sq_dist(&x[b], &centroids[labels[b]]))
            });
        if let Some(i) = far {
            let old = labels[i];
            counts[old] -= 1;
            sums[old].iter_mut().zip(&x[i]).for_each(|(s, v)| *s -= v);
            labels[i] = j;
            counts[j] = 1;
            sums[j] = x[i].clone();
        }
    }
    for j in 0..k {
        if counts[j] > 0 {
            centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
        }
    }
}

fn inertia(x: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    x.iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum()
}

fn lloyd(x: &[Vec<f64>], k: usize, seed: u64, restart: usize) -> ClusterAssignment {
    let mut centroids = seed_centroids(x, k, seed, restart);
    let mut labels: Vec<usize> = x.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut history = Vec::new();
    for _ in 0..MAX_LLOYD_ITERS {
        update_centroids(x, &mut labels, &mut centroids);
        history.push(inertia(x, &labels, &centroids));
        let next: Vec<usize> = x
            .iter()
            .zip(&labels)
            .map(|(p, &l)| {
                // stay put on ties so the fixpoint is reached
                let (j, d) = nearest(p, &centroids);
                if d < sq_dist(p, &centroids[l]) {
                    j
                } else {
                    l
                }
            })
            .collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let inertia = inertia(x, &labels, &centroids);
    ClusterAssignment {
        k,
        labels,
        centroids,
        inertia,
        history,
    }
}
