//! Hypothesis tests and cluster summaries used to interpret sub-phenotypes.

mod ancova;
mod report;
mod tukey;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::{Error, Result};

pub use ancova::{ancova_adjust, least_squares_rss};
pub use report::{
    build_subtype_report, heatmap_matrix, report_variables, stage_composition, Heatmap, ReportRow,
    RowKind, StageComposition, SubtypeReport, FIRST_HOURS,
};
pub use tukey::{q_crit_05, TUKEY_MAX_GROUPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub i: usize,
    pub j: usize,
    pub mean_diff: f64,
    pub threshold: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// One entry for chi-square style tests, `(numerator, denominator)` for F.
    pub dof: Vec<f64>,
    pub pairwise: Option<Vec<PairResult>>,
}

impl TestResult {
    fn new(statistic: f64, p_value: f64, dof: Vec<f64>) -> Self {
        Self {
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            dof,
            pairwise: None,
        }
    }
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, dof: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let d =
        ChiSquared::new(dof).map_err(|e| Error::Argument(format!("chi-square dof {dof}: {e}")))?;
    Ok(d.sf(x))
}

/// Upper tail of the F distribution.
pub fn f_sf(x: f64, d1: f64, d2: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let d = FisherSnedecor::new(d1, d2)
        .map_err(|e| Error::Argument(format!("F dof ({d1}, {d2}): {e}")))?;
    Ok(d.sf(x))
}

/// Pearson chi-square test of independence on an `r x c` count table.
pub fn chi_square_test(table: &[Vec<f64>]) -> Result<TestResult> {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    if r < 2 || c < 2 || table.iter().any(|row| row.len() != c) {
        return Err(Error::Argument(
            "chi-square needs a rectangular table of at least 2x2".into(),
        ));
    }
    if table
        .iter()
        .flatten()
        .any(|&v| !(v >= 0.0) || !v.is_finite())
    {
        return Err(Error::Argument(
            "counts must be finite and non-negative".into(),
        ));
    }
    let rows: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let cols: Vec<f64> = (0..c)
        .map(|j| table.iter().map(|row| row[j]).sum())
        .collect();
    if rows.iter().chain(&cols).any(|&m| m == 0.0) {
        return Err(Error::Argument(
            "chi-square table has a zero marginal".into(),
        ));
    }
    let total: f64 = rows.iter().sum();
    let mut stat = 0.0;
    for i in 0..r {
        for j in 0..c {
            let e = rows[i] * cols[j] / total;
            stat += (table[i][j] - e).powi(2) / e;
        }
    }
    let dof = ((r - 1) * (c - 1)) as f64;
    Ok(TestResult::new(stat, chi_square_sf(stat, dof)?, vec![dof]))
}

fn check_groups(groups: &[Vec<f64>], min_size: usize, what: &str) -> Result<()> {
    if groups.len() < 2 {
        return Err(Error::Argument(format!("{what} needs at least two groups")));
    }
    if let Some(i) = groups.iter().position(|g| g.len() < min_size) {
        return Err(Error::Argument(format!(
            "{what}: group {i} has {} values, need {min_size}",
            groups[i].len()
        )));
    }
    if groups.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Argument(format!("{what}: non-finite value")));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Within-group sum of squares, its degrees of freedom and the group means.
fn within(groups: &[Vec<f64>]) -> (f64, f64, Vec<f64>) {
    let means: Vec<f64> = groups.iter().map(|g| mean(g)).collect();
    let ss: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.iter().map(|x| (x - m).powi(2)).sum::<f64>())
        .sum();
    let n: usize = groups.iter().map(Vec::len).sum();
    (ss, (n - groups.len()) as f64, means)
}

/// One-way ANOVA F test.
pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<TestResult> {
    check_groups(groups, 2, "anova")?;
    let (ss_w, df_w, means) = within(groups);
    let n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let ss_b: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.len() as f64 * (m - grand).powi(2))
        .sum();
    let df_b = (groups.len() - 1) as f64;
    let dof = vec![df_b, df_w];
    let scale = groups
        .iter()
        .flatten()
        .map(|x| x.abs())
        .fold(0.0, f64::max)
        .max(1.0);
    // between-group spread at rounding level counts as none
    let ss_b = if ss_b <= 1e-24 * scale * scale * n as f64 {
        0.0
    } else {
        ss_b
    };
    if ss_w == 0.0 {
        return Ok(if ss_b == 0.0 {
            TestResult::new(0.0, 1.0, dof)
        } else {
            TestResult::new(f64::INFINITY, 0.0, dof)
        });
    }
    let f = (ss_b / df_b) / (ss_w / df_w);
    Ok(TestResult::new(f, f_sf(f, df_b, df_w)?, dof))
}

/// Average ranks (1-based) of the pooled values, ties sharing their mean rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Kruskal-Wallis H test with tie correction and a chi-square reference.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<TestResult> {
    check_groups(groups, 1, "kruskal-wallis")?;
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let dof = vec![(groups.len() - 1) as f64];
    let ranks = midranks(&pooled);
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        let t = j as f64;
        ties += t * t * t - t;
        i += j;
    }
    let correction = 1.0 - ties / (n * n * n - n);
    if correction <= 0.0 {
        return Ok(TestResult::new(0.0, 1.0, dof));
    }
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = ((12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction).max(0.0);
    // exact-arithmetic zero can come out as a tiny positive residue
    let h = if h < 1e-10 { 0.0 } else { h };
    Ok(TestResult::new(h, chi_square_sf(h, dof[0])?, dof))
}

/// Tukey-Kramer pairwise comparisons at alpha 0.05. The returned statistic
/// and p-value are those of the one-way ANOVA.
pub fn tukey_hsd(groups: &[Vec<f64>]) -> Result<TestResult> {
    check_groups(groups, 2, "tukey hsd")?;
    let mut result = one_way_anova(groups)?;
    let (ss_w, df_w, means) = within(groups);
    let ms_w = ss_w / df_w;
    let q = q_crit_05(groups.len(), df_w)?;
    let mut pairs = Vec::new();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let diff = (means[i] - means[j]).abs();
            let se =
                (ms_w / 2.0 * (1.0 / groups[i].len() as f64 + 1.0 / groups[j].len() as f64)).sqrt();
            let threshold = q * se;
            pairs.push(PairResult {
                i,
                j,
                mean_diff: means[i] - means[j],
                threshold,
                significant: diff > 0.0 && diff > threshold,
            });
        }
    }
    result.pairwise = Some(pairs);
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Parametric,
    Nonparametric,
}

/// Sample skewness and excess kurtosis from central moments.
pub fn shape_moments(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return None;
    }
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    Some((m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0))
}

/// ANOVA when `|skewness| < 1` and `|excess kurtosis| < 2`, otherwise
/// Kruskal-Wallis. Samples under 8 values or without spread go
/// nonparametric.
pub fn normality_route(xs: &[f64]) -> Route {
    if xs.len() < 8 {
        return Route::Nonparametric;
    }
    match shape_moments(xs) {
        Some((s, k)) if s.abs() < 1.0 && k.abs() < 2.0 => Route::Parametric,
        _ => Route::Nonparametric,
    }
}
