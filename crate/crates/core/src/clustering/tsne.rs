use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{check_matrix, sq_dist};
use crate::util::rng_for;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iters: usize,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    /// `None` means `n / 12`.
    pub learning_rate: Option<f64>,
    pub momentum: f64,
    pub final_momentum: f64,
    /// Iterations between KL evaluations.
    pub kl_every: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iters: 1000,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            learning_rate: None,
            momentum: 0.5,
            final_momentum: 0.8,
            kl_every: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub embedding: Vec<Vec<f64>>,
    /// `(iteration, KL(P || Q))` with the unexaggerated `P`; the first entry
    /// is the initial layout, the last the final one.
    pub kl_history: Vec<(usize, f64)>,
}

impl TsneResult {
    pub fn initial_kl(&self) -> f64 {
        self.kl_history.first().map_or(f64::NAN, |e| e.1)
    }

    pub fn final_kl(&self) -> f64 {
        self.kl_history.last().map_or(f64::NAN, |e| e.1)
    }
}

const P_FLOOR: f64 = 1e-12;
const MIN_GAIN: f64 = 0.01;

/// Exact t-SNE to two dimensions.
pub fn tsne_embed(x: &[Vec<f64>], cfg: &TsneConfig) -> Result<TsneResult> {
    check_matrix(x, "tsne")?;
    let n = x.len();
    if !(cfg.perplexity > 0.0) || (n as f64) <= 3.0 * cfg.perplexity {
        return Err(Error::Argument(format!(
            "perplexity {} is infeasible for {n} points (need n > 3 * perplexity)",
            cfg.perplexity
        )));
    }
    let p = joint_probabilities(x, cfg.perplexity);

    let mut rng = rng_for(cfg.seed, "tsne.init");
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let lr = cfg.learning_rate.unwrap_or(n as f64 / 12.0);
    let every = cfg.kl_every.max(1);

    let mut kl_history = vec![(0, kl_divergence(&p, &y))];
    let mut num = vec![0.0; n * n];
    for it in 0..cfg.iters {
        let ex = if it < cfg.exaggeration_iters {
            cfg.exaggeration
        } else {
            1.0
        };
        let mom = if it < cfg.exaggeration_iters {
            cfg.momentum
        } else {
            cfg.final_momentum
        };
        let z = student_kernel(&y, &mut num);
        for i in 0..n {
            let mut g = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = num[i * n + j];
                let coeff = (ex * p[i * n + j] - w / z) * w;
                g[0] += coeff * (y[i][0] - y[j][0]);
                g[1] += coeff * (y[i][1] - y[j][1]);
            }
            for c in 0..2 {
                let grad = 4.0 * g[c];
                gains[i][c] = if (grad > 0.0) != (update[i][c] > 0.0) {
                    gains[i][c] + 0.2
                } else {
                    (gains[i][c] * 0.8).max(MIN_GAIN)
                };
                update[i][c] = mom * update[i][c] - lr * gains[i][c] * grad;
            }
        }
        for (yi, ui) in y.iter_mut().zip(&update) {
            yi[0] += ui[0];
            yi[1] += ui[1];
        }
        let centre = [
            y.iter().map(|v| v[0]).sum::<f64>() / n as f64,
            y.iter().map(|v| v[1]).sum::<f64>() / n as f64,
        ];
        for yi in &mut y {
            yi[0] -= centre[0];
            yi[1] -= centre[1];
        }
        let done = it + 1;
        if done % every == 0 || done == cfg.iters {
            kl_history.push((done, kl_divergence(&p, &y)));
        }
    }
    if y.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
        return Err(Error::Optimization {
            param: "tsne.layout".into(),
            reason: "layout diverged".into(),
        });
    }
    Ok(TsneResult {
        embedding: y.into_iter().map(|v| v.to_vec()).collect(),
        kl_history,
    })
}

/// Fills `num` with `1 / (1 + |y_i - y_j|^2)` (zero diagonal) and returns its sum.
fn student_kernel(y: &[[f64; 2]], num: &mut [f64]) -> f64 {
    let n = y.len();
    let mut z = 0.0;
    for i in 0..n {
        num[i * n + i] = 0.0;
        for j in i + 1..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let w = 1.0 / (1.0 + dx * dx + dy * dy);
            num[i * n + j] = w;
            num[j * n + i] = w;
            z += 2.0 * w;
        }
    }
    z
}

fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let mut num = vec![0.0; n * n];
    let z = student_kernel(y, &mut num);
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let pij = p[i * n + j];
                let qij = (num[i * n + j] / z).max(P_FLOOR);
                kl += pij * (pij / qij).ln();
            }
        }
    }
    kl.max(0.0)
}

/// Symmetrised affinities `(p_{j|i} + p_{i|j}) / 2n`, floored at `P_FLOOR`.
fn joint_probabilities(x: &[Vec<f64>], perplexity: f64) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = sq_dist(&x[i], &x[j]);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let target = perplexity.ln();
    let mut cond = vec![0.0; n * n];
    for i in 0..n {
        let row = &d[i * n..(i + 1) * n];
        let p = conditional_row(row, i, target);
        cond[i * n..(i + 1) * n].copy_from_slice(&p);
    }
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] =
                    ((cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64)).max(P_FLOOR);
            }
        }
    }
    p
}

/// Gaussian conditional distribution of point `i` whose entropy (nats)
/// matches `target`, found by bisection on the precision.
fn conditional_row(dist: &[f64], i: usize, target: f64) -> Vec<f64> {
    let n = dist.len();
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut beta = 1.0;
    let mut p = vec![0.0; n];
    for _ in 0..200 {
        let min_d = dist
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v)
            .fold(f64::INFINITY, f64::min);
        let mut sum = 0.0;
        let mut weighted = 0.0;
        for j in 0..n {
            // shifting by the nearest distance keeps exp() from underflowing
            p[j] = if j == i {
                0.0
            } else {
                (-beta * (dist[j] - min_d)).exp()
            };
            sum += p[j];
            weighted += p[j] * (dist[j] - min_d);
        }
        let entropy = sum.ln() + beta * weighted / sum;
        p.iter_mut().for_each(|v| *v /= sum);
        let diff = entropy - target;
        if diff.abs() < 1e-10 {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() {
                (beta + hi) / 2.0
            } else {
                beta * 2.0
            };
        } else {
            hi = beta;
            beta = (beta + lo) / 2.0;
        }
    }
    p
}
