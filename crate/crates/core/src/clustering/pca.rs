use super::check_matrix;
use crate::{Error, Result};

const MAX_ITERS: usize = 20_000;
const TOL: f64 = 1e-15;

/// Principal components of a data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit-norm directions, strongest first.
    pub components: Vec<Vec<f64>>,
    /// Sample-covariance eigenvalues matching `components`.
    pub eigenvalues: Vec<f64>,
    /// Row scores on the components.
    pub projection: Vec<Vec<f64>>,
}

impl Pca {
    /// Maps scores back to the input space.
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        self.projection
            .iter()
            .map(|s| {
                let mut x = self.mean.clone();
                for (c, &w) in self.components.iter().zip(s) {
                    for (xi, ci) in x.iter_mut().zip(c) {
                        *xi += w * ci;
                    }
                }
                x
            })
            .collect()
    }
}

/// Projects mean-centred rows onto the top `out_dim` eigenvectors of the
/// sample covariance, found by power iteration with deflation. Each
/// component's largest-magnitude coordinate is made positive.
pub fn pca_project(x: &[Vec<f64>], out_dim: usize) -> Result<Pca> {
    let d = check_matrix(x, "pca")?;
    let n = x.len();
    if n < 2 || d < 2 {
        return Err(Error::Argument(format!(
            "pca needs at least 2x2 data, got {n}x{d}"
        )));
    }
    if out_dim == 0 || out_dim > d {
        return Err(Error::Argument(format!(
            "cannot project {d} columns to {out_dim}"
        )));
    }
    let mut mean = vec![0.0; d];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centred: Vec<Vec<f64>> = x
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for r in &centred {
        for i in 0..d {
            for j in i..d {
                cov[i][j] += r[i] * r[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= (n - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
    if trace <= 0.0 {
        return Err(Error::Degenerate("pca input has zero variance".into()));
    }

    let mut components: Vec<Vec<f64>> = Vec::with_capacity(out_dim);
    let mut eigenvalues = Vec::with_capacity(out_dim);
    for k in 0..out_dim {
        let (mut v, lambda) = power_iteration(&cov, &components, k);
        let big = (0..d)
            .max_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs()))
            .unwrap_or(0);
        if v[big] < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
        for i in 0..d {
            for j in 0..d {
                cov[i][j] -= lambda * v[i] * v[j];
            }
        }
        components.push(v);
        eigenvalues.push(lambda);
    }
    let projection = centred
        .iter()
        .map(|r| components.iter().map(|c| dot(c, r)).collect())
        .collect();
    Ok(Pca {
        mean,
        components,
        eigenvalues,
        projection,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthonormalize(v: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let p = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Dominant eigenpair of the (already deflated) symmetric matrix `m`, kept
/// orthogonal to `found`. Falls back to any orthogonal unit vector with
/// eigenvalue 0 once nothing is left.
fn power_iteration(m: &[Vec<f64>], found: &[Vec<f64>], k: usize) -> (Vec<f64>, f64) {
    let d = m.len();
    // deterministic start that is unlikely to be orthogonal to anything
    let mut v: Vec<f64> = (0..d)
        .map(|i| 1.0 + ((i * 7919 + k * 104_729) % 997) as f64 / 997.0)
        .collect();
    orthonormalize(&mut v, found);
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERS {
        let mut w: Vec<f64> = m.iter().map(|row| dot(row, &v)).collect();
        let norm = orthonormalize(&mut w, found);
        if norm <= f64::EPSILON * 1e3 {
            break;
        }
        let new_lambda = dot(&w, &m.iter().map(|row| dot(row, &w)).collect::<Vec<_>>());
        let delta: f64 = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = w;
        let settled = (new_lambda - lambda).abs() <= TOL * new_lambda.abs().max(1.0);
        lambda = new_lambda;
        if settled && delta < 1e-12 {
            break;
        }
    }
    if dot(&v, &v) == 0.0 || lambda <= 0.0 {
        for e in 0..d {
            let mut u = vec![0.0; d];
            u[e] = 1.0;
            if orthonormalize(&mut u, found) > 1e-6 {
                return (u, lambda.max(0.0));
            }
        }
    }
    (v, lambda.max(0.0))
}
