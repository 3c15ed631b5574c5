use serde::{Deserialize, Serialize};

use crate::numeric::{cross_entropy, sigmoid};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrParams {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2: f64,
}

impl LrParams {
    pub fn zeros(dim: usize, l2: f64) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
            l2,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.bias + crate::numeric::dot(&self.weights, x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrTrainConfig {
    pub l2: f64,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for LrTrainConfig {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            epochs: 500,
            lr: 0.5,
        }
    }
}

/// Mean cross-entropy plus `l2/2 * |w|^2` (the bias is not penalised).
pub fn lr_loss(p: &LrParams, xs: &[Vec<f64>], ys: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        total += cross_entropy(p.predict(x), y)?;
    }
    let reg: f64 = p.weights.iter().map(|w| w * w).sum();
    Ok(total / xs.len() as f64 + 0.5 * p.l2 * reg)
}

/// Analytic gradient of [`lr_loss`] as (d weights, d bias).
pub fn lr_gradient(p: &LrParams, xs: &[Vec<f64>], ys: &[f64]) -> (Vec<f64>, f64) {
    let n = xs.len() as f64;
    let mut gw: Vec<f64> = p.weights.iter().map(|w| p.l2 * w).collect();
    let mut gb = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let r = (p.predict(x) - y) / n;
        for (g, xi) in gw.iter_mut().zip(x) {
            *g += r * xi;
        }
        gb += r;
    }
    (gw, gb)
}

/// Full-batch gradient descent with a fixed step from zero weights.
pub fn lr_train(xs: &[Vec<f64>], ys: &[f64], cfg: &LrTrainConfig) -> Result<LrParams> {
    let Some(dim) = xs.first().map(Vec::len) else {
        return Err(Error::Training("empty training set".into()));
    };
    if xs.len() != ys.len() || xs.iter().any(|x| x.len() != dim) {
        return Err(Error::Dimension("ragged logistic-regression inputs".into()));
    }
    let pos = ys.iter().filter(|&&y| y == 1.0).count();
    if pos == 0 || pos == ys.len() {
        return Err(Error::Training(
            "training labels contain a single class".into(),
        ));
    }
    let mut p = LrParams::zeros(dim, cfg.l2);
    for _ in 0..cfg.epochs {
        let (gw, gb) = lr_gradient(&p, xs, ys);
        for (w, g) in p.weights.iter_mut().zip(&gw) {
            *w -= cfg.lr * g;
        }
        p.bias -= cfg.lr * gb;
    }
    if !p.bias.is_finite() || p.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Training("logistic regression diverged".into()));
    }
    Ok(p)
}

/// Column-wise mean imputation and standardisation fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    /// `missing[i][k]` marks entries excluded from the statistics.
    pub fn fit(xs: &[Vec<f64>], missing: Option<&[Vec<bool>]>) -> Result<Self> {
        let Some(dim) = xs.first().map(Vec::len) else {
            return Err(Error::Argument("cannot standardise an empty set".into()));
        };
        let mut mean = vec![0.0; dim];
        let mut sd = vec![0.0; dim];
        for k in 0..dim {
            let col: Vec<f64> = xs
                .iter()
                .enumerate()
                .filter(|(i, _)| !missing.is_some_and(|m| m[*i][k]))
                .map(|(_, x)| x[k])
                .collect();
            if col.is_empty() {
                continue;
            }
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / col.len() as f64;
            mean[k] = m;
            sd[k] = var.sqrt();
        }
        Ok(Self { mean, sd })
    }

    pub fn apply(&self, x: &[f64], missing: Option<&[bool]>) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, &v)| {
                let v = if missing.is_some_and(|m| m[k]) {
                    self.mean[k]
                } else {
                    v
                };
                if self.sd[k] > 0.0 {
                    (v - self.mean[k]) / self.sd[k]
                } else {
                    0.0
                }
            })
            .collect()
    }
}
