use super::{f_sf, TestResult};
use crate::{Error, Result};

const RANK_TOL: f64 = 1e-10;

/// Residual sum of squares of the least-squares fit of `y` on the given
/// columns, via modified Gram-Schmidt. Columns that are numerically
/// dependent on earlier ones raise a rank error.
pub fn least_squares_rss(columns: &[Vec<f64>], y: &[f64]) -> Result<f64> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(columns.len());
    for (k, col) in columns.iter().enumerate() {
        if col.len() != y.len() {
            return Err(Error::Dimension(format!(
                "design column {k} has {} rows, response has {}",
                col.len(),
                y.len()
            )));
        }
        let norm0 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = col.clone();
        for b in &q {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm0 == 0.0 || norm <= RANK_TOL * norm0 {
            return Err(Error::NumericalRank(format!(
                "design column {k} is collinear with earlier columns"
            )));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        q.push(v);
    }
    let mut r = y.to_vec();
    for b in &q {
        let p: f64 = r.iter().zip(b).map(|(x, y)| x * y).sum();
        r.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
    }
    Ok(r.iter().map(|x| x * x).sum())
}

/// F test of the group block in `value ~ 1 + covariate + group`, against
/// `value ~ 1 + covariate`.
pub fn ancova_adjust(values: &[f64], groups: &[usize], covariate: &[f64]) -> Result<TestResult> {
    let n = values.len();
    if groups.len() != n || covariate.len() != n {
        return Err(Error::Dimension("ancova inputs differ in length".into()));
    }
    let k = groups.iter().max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(Error::Argument("ancova needs at least two groups".into()));
    }
    if (0..k).any(|g| !groups.contains(&g)) {
        return Err(Error::Argument(
            "ancova group labels must cover 0..k".into(),
        ));
    }
    let df_full = n as f64 - (k + 1) as f64;
    if df_full < 1.0 {
        return Err(Error::Argument(format!(
            "{n} observations are too few for {k} groups"
        )));
    }
    let mut cols = vec![vec![1.0; n], covariate.to_vec()];
    let reduced = least_squares_rss(&cols, values)?;
    for g in 1..k {
        cols.push(groups.iter().map(|&x| (x == g) as u8 as f64).collect());
    }
    let full = least_squares_rss(&cols, values)?;
    let df_group = (k - 1) as f64;
    let dof = vec![df_group, df_full];
    let gain = (reduced - full).max(0.0);
    let scale = values
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    if gain <= 1e-13 * scale {
        return Ok(TestResult::new(0.0, 1.0, dof));
    }
    if full <= 1e-13 * scale {
        return Ok(TestResult::new(f64::INFINITY, 0.0, dof));
    }
    let f = (gain / df_group) / (full / df_full);
    Ok(TestResult::new(f, f_sf(f, df_group, df_full)?, dof))
}
