use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_matrix, kmeans, sq_dist, ClusterAssignment};
use crate::{Error, Result};

fn check_labels(x: &[Vec<f64>], labels: &[usize], k: usize) -> Result<Vec<usize>> {
    if labels.len() != x.len() {
        return Err(Error::Dimension(format!(
            "{} labels for {} points",
            labels.len(),
            x.len()
        )));
    }
    let mut counts = vec![0usize; k];
    for &l in labels {
        if l >= k {
            return Err(Error::Argument(format!("label {l} outside [0, {k})")));
        }
        counts[l] += 1;
    }
    if let Some(j) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Argument(format!("cluster {j} is empty")));
    }
    Ok(counts)
}

/// Mean within-cluster over mean between-cluster Euclidean distance.
pub fn mcclain_rao(x: &[Vec<f64>], labels: &[usize], k: usize) -> Result<f64> {
    check_matrix(x, "mcclain_rao")?;
    if k < 2 {
        return Err(Error::Argument(
            "mcclain_rao needs at least two clusters".into(),
        ));
    }
    check_labels(x, labels, k)?;
    let (mut sw, mut nw, mut sb, mut nb) = (0.0, 0u64, 0.0, 0u64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let d = sq_dist(&x[i], &x[j]).sqrt();
            if labels[i] == labels[j] {
                sw += d;
                nw += 1;
            } else {
                sb += d;
                nb += 1;
            }
        }
    }
    let within = if nw == 0 { 0.0 } else { sw / nw as f64 };
    let between = sb / nb as f64;
    if between == 0.0 {
        return Err(Error::Degenerate(
            "all between-cluster distances are zero".into(),
        ));
    }
    Ok(within / between)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub best_k: usize,
    /// `(k, McClain-Rao index, inertia)` for every candidate.
    pub table: Vec<(usize, f64, f64)>,
    pub assignment: ClusterAssignment,
}

/// Runs K-means for each candidate `k` and keeps the smallest index (the
/// smaller `k` on ties).
pub fn select_k(
    x: &[Vec<f64>],
    k_range: &[usize],
    seed: u64,
    restarts: usize,
) -> Result<KSelection> {
    if k_range.is_empty() {
        return Err(Error::Argument("empty k range".into()));
    }
    let mut table = Vec::with_capacity(k_range.len());
    let mut best: Option<(f64, ClusterAssignment)> = None;
    for &k in k_range {
        if k < 2 || k + 1 > x.len() {
            return Err(Error::Argument(format!(
                "k = {k} outside [2, {}]",
                x.len().saturating_sub(1)
            )));
        }
        let a = kmeans(x, k, seed, restarts)?;
        let idx = mcclain_rao(x, &a.labels, k)?;
        table.push((k, idx, a.inertia));
        let better = match &best {
            None => true,
            Some((b, ba)) => idx < *b || (idx == *b && k < ba.k),
        };
        if better {
            best = Some((idx, a));
        }
    }
    let (_, assignment) = best.expect("non-empty range");
    Ok(KSelection {
        best_k: assignment.k,
        table,
        assignment,
    })
}

fn choose2(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Chance-corrected agreement between two partitions of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "partitions of {} and {} items",
            a.len(),
            b.len()
        )));
    }
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sa: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sb: f64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(a.len() as u64);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sa * sb / total;
    let max = (sa + sb) / 2.0;
    if max == expected {
        // both partitions trivial in the same way
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Mean silhouette width with Euclidean distances; singletons score 0.
pub fn silhouette(x: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    check_matrix(x, "silhouette")?;
    let k = labels.iter().max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(Error::Argument(
            "silhouette needs at least two clusters".into(),
        ));
    }
    let counts = check_labels(x, labels, k)?;
    let n = x.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if i != j {
                sums[labels[j]] += sq_dist(&x[i], &x[j]).sqrt();
            }
        }
        let own = labels[i];
        if counts[own] == 1 {
            continue;
        }
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}
