use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    ancova_adjust, chi_square_test, kruskal_wallis, normality_route, one_way_anova, tukey_hsd,
    Route, TUKEY_MAX_GROUPS,
};
use crate::cohort::{Comorbidities, Ethnicity, IcuStay, Medications, Sex, Variable};
use crate::kdigo::{egfr_mdrd, AkiLabel};
use crate::{Error, Result};

/// Continuous variables are summarised over this many hours from admission.
pub const FIRST_HOURS: f64 = 24.0;

const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub kind: RowKind,
    /// "mean (sd)" or "count (pct%)" per cluster.
    pub cells: Vec<String>,
    /// Cluster means, or percentages for discrete rows.
    pub cluster_values: Vec<f64>,
    pub pooled_mean: f64,
    pub pooled_sd: f64,
    /// "anova", "kruskal_wallis", "chi_square" or empty when untested.
    pub test: String,
    pub p_unadjusted: Option<f64>,
    pub p_adjusted: Option<f64>,
    /// Cluster pairs the post-hoc comparison separates.
    pub significant_pairs: Vec<(usize, usize)>,
}

impl ReportRow {
    pub fn significant(&self) -> bool {
        self.p_unadjusted.is_some_and(|p| p < ALPHA)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtypeReport {
    pub k: usize,
    pub cluster_sizes: Vec<usize>,
    pub rows: Vec<ReportRow>,
}

/// Row names of the report, in order.
pub fn report_variables() -> Vec<String> {
    let mut v = vec!["age".to_string(), "sex_male".to_string()];
    v.extend(
        Ethnicity::ALL
            .iter()
            .map(|e| format!("ethnicity_{}", ethnicity_name(*e))),
    );
    v.extend(Medications::NAMES.iter().map(|s| s.to_string()));
    v.extend(Comorbidities::NAMES.iter().map(|s| s.to_string()));
    v.extend(Variable::ALL.iter().map(|s| s.name().to_string()));
    v.push("egfr".into());
    v
}

fn ethnicity_name(e: Ethnicity) -> &'static str {
    match e {
        Ethnicity::White => "white",
        Ethnicity::Black => "black",
        Ethnicity::Asian => "asian",
        Ethnicity::Other => "other",
    }
}

fn first_hours_mean(stay: &IcuStay, v: Variable) -> Option<f64> {
    let s = stay.series(v)?;
    let vals: Vec<f64> = s
        .points
        .iter()
        .filter(|(t, _)| *t >= 0.0 && *t < FIRST_HOURS)
        .map(|p| p.1)
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (m, var.sqrt())
}

struct Ctx<'a> {
    k: usize,
    clusters: &'a [usize],
    ages: Vec<f64>,
}

impl Ctx<'_> {
    /// `values[i]` is `None` where stay `i` has no value.
    fn continuous(&self, name: &str, values: &[Option<f64>], adjust: bool) -> Result<ReportRow> {
        let mut groups = vec![Vec::new(); self.k];
        let mut obs = Vec::new();
        for (i, v) in values.iter().enumerate() {
            if let Some(x) = v {
                groups[self.clusters[i]].push(*x);
                obs.push((*x, self.clusters[i], self.ages[i]));
            }
        }
        let pooled: Vec<f64> = obs.iter().map(|o| o.0).collect();
        let (pm, psd) = mean_sd(&pooled);
        let mut cells = Vec::with_capacity(self.k);
        let mut cluster_values = Vec::with_capacity(self.k);
        for g in &groups {
            let (m, s) = mean_sd(g);
            cells.push(if g.is_empty() {
                "-".into()
            } else {
                format!("{m:.2} ({s:.2})")
            });
            cluster_values.push(m);
        }
        let mut row = ReportRow {
            name: name.into(),
            kind: RowKind::Continuous,
            cells,
            cluster_values,
            pooled_mean: pm,
            pooled_sd: psd,
            test: String::new(),
            p_unadjusted: None,
            p_adjusted: None,
            significant_pairs: Vec::new(),
        };
        if self.k < 2 || groups.iter().any(|g| g.len() < 2) {
            return Ok(row);
        }
        let (test, result) = match normality_route(&pooled) {
            Route::Parametric => ("anova", one_way_anova(&groups)?),
            Route::Nonparametric => ("kruskal_wallis", kruskal_wallis(&groups)?),
        };
        row.test = test.into();
        row.p_unadjusted = Some(result.p_value);
        if self.k <= TUKEY_MAX_GROUPS {
            let hsd = tukey_hsd(&groups)?;
            row.significant_pairs = hsd
                .pairwise
                .unwrap_or_default()
                .into_iter()
                .filter(|p| p.significant)
                .map(|p| (p.i, p.j))
                .collect();
        }
        if adjust {
            let vals: Vec<f64> = obs.iter().map(|o| o.0).collect();
            let gs: Vec<usize> = obs.iter().map(|o| o.1).collect();
            let ages: Vec<f64> = obs.iter().map(|o| o.2).collect();
            row.p_adjusted = adjusted(&vals, &gs, &ages)?;
        }
        Ok(row)
    }

    fn discrete(&self, name: &str, flags: &[bool]) -> ReportRow {
        let mut counts = vec![0usize; self.k];
        let mut sizes = vec![0usize; self.k];
        for (i, &f) in flags.iter().enumerate() {
            sizes[self.clusters[i]] += 1;
            counts[self.clusters[i]] += f as usize;
        }
        let vals: Vec<f64> = flags.iter().map(|&f| f as u8 as f64).collect();
        let (pm, psd) = mean_sd(&vals);
        let pct: Vec<f64> = counts
            .iter()
            .zip(&sizes)
            .map(|(&c, &n)| {
                if n == 0 {
                    f64::NAN
                } else {
                    100.0 * c as f64 / n as f64
                }
            })
            .collect();
        ReportRow {
            name: name.into(),
            kind: RowKind::Discrete,
            cells: counts
                .iter()
                .zip(&pct)
                .map(|(c, p)| format!("{c} ({p:.2}%)"))
                .collect(),
            cluster_values: pct,
            pooled_mean: pm,
            pooled_sd: psd,
            test: String::new(),
            p_unadjusted: None,
            p_adjusted: None,
            significant_pairs: Vec::new(),
        }
    }

    /// Chi-square on the cluster x category table, dropping empty categories.
    fn block_test(&self, categories: &[Vec<bool>]) -> Option<f64> {
        if self.k < 2 {
            return None;
        }
        let table: Vec<Vec<f64>> = (0..self.k)
            .map(|c| {
                categories
                    .iter()
                    .map(|flags| {
                        flags
                            .iter()
                            .zip(self.clusters)
                            .filter(|(f, &l)| **f && l == c)
                            .count() as f64
                    })
                    .collect()
            })
            .collect();
        let keep: Vec<usize> = (0..categories.len())
            .filter(|&j| table.iter().any(|r| r[j] > 0.0))
            .collect();
        if keep.len() < 2 {
            return None;
        }
        let table: Vec<Vec<f64>> = table
            .iter()
            .map(|r| keep.iter().map(|&j| r[j]).collect())
            .collect();
        chi_square_test(&table).ok().map(|t| t.p_value)
    }

    /// Age-adjusted p of a category block: ANCOVA on each indicator,
    /// Bonferroni-combined over the categories that vary.
    fn block_adjusted(&self, categories: &[Vec<bool>]) -> Result<Option<f64>> {
        if self.k < 2 {
            return Ok(None);
        }
        let mut ps = Vec::new();
        for flags in categories {
            let vals: Vec<f64> = flags.iter().map(|&f| f as u8 as f64).collect();
            if let Some(p) = adjusted(&vals, self.clusters, &self.ages)? {
                ps.push(p);
            }
        }
        if ps.is_empty() {
            return Ok(None);
        }
        let m = ps.len() as f64;
        Ok(Some((ps.iter().copied().fold(1.0, f64::min) * m).min(1.0)))
    }
}

/// ANCOVA p, or `None` when the model cannot be fitted on this subset.
fn adjusted(values: &[f64], groups: &[usize], ages: &[f64]) -> Result<Option<f64>> {
    let k = groups.iter().max().map_or(0, |m| m + 1);
    if k < 2 || (0..k).any(|g| !groups.contains(&g)) || values.len() < k + 2 {
        return Ok(None);
    }
    match ancova_adjust(values, groups, ages) {
        Ok(r) => Ok(Some(r.p_value)),
        Err(Error::NumericalRank(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Per-cluster descriptive statistics with unadjusted and age-adjusted tests.
pub fn build_subtype_report(
    stays: &[IcuStay],
    labels: &[AkiLabel],
    clusters: &[usize],
) -> Result<SubtypeReport> {
    if stays.len() != labels.len() || stays.len() != clusters.len() {
        return Err(Error::Dimension(format!(
            "{} stays, {} labels, {} cluster ids",
            stays.len(),
            labels.len(),
            clusters.len()
        )));
    }
    if let Some(i) = labels.iter().position(|l| !l.is_case) {
        return Err(Error::Data(format!(
            "stay {} is not an AKI case",
            stays[i].stay_id
        )));
    }
    let k = clusters.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &c in clusters {
        sizes[c] += 1;
    }
    if let Some(c) = sizes.iter().position(|&n| n == 0) {
        return Err(Error::Argument(format!("cluster {c} is empty")));
    }
    let ctx = Ctx {
        k,
        clusters,
        ages: stays.iter().map(|s| s.age).collect(),
    };
    let mut rows = Vec::new();

    let ages: Vec<Option<f64>> = stays.iter().map(|s| Some(s.age)).collect();
    rows.push(ctx.continuous("age", &ages, false)?);

    let male: Vec<bool> = stays.iter().map(|s| s.sex == Sex::Male).collect();
    let female: Vec<bool> = male.iter().map(|m| !m).collect();
    let mut row = ctx.discrete("sex_male", &male);
    row.test = "chi_square".into();
    row.p_unadjusted = ctx.block_test(&[male.clone(), female]);
    row.p_adjusted = ctx.block_adjusted(&[male])?;
    rows.push(row);

    let eth: Vec<Vec<bool>> = Ethnicity::ALL
        .iter()
        .map(|e| stays.iter().map(|s| s.ethnicity == *e).collect())
        .collect();
    let p_eth = ctx.block_test(&eth);
    let p_eth_adj = ctx.block_adjusted(&eth)?;
    for (e, flags) in Ethnicity::ALL.iter().zip(&eth) {
        let mut row = ctx.discrete(&format!("ethnicity_{}", ethnicity_name(*e)), flags);
        row.test = "chi_square".into();
        row.p_unadjusted = p_eth;
        row.p_adjusted = p_eth_adj;
        rows.push(row);
    }

    let binary_blocks: Vec<(&str, Vec<bool>)> = Medications::NAMES
        .iter()
        .enumerate()
        .map(|(j, n)| {
            (
                *n,
                stays.iter().map(|s| s.medications.as_array()[j]).collect(),
            )
        })
        .chain(Comorbidities::NAMES.iter().enumerate().map(|(j, n)| {
            (
                *n,
                stays
                    .iter()
                    .map(|s| s.comorbidities.as_array()[j])
                    .collect(),
            )
        }))
        .collect();
    for (name, flags) in binary_blocks {
        let mut row = ctx.discrete(name, &flags);
        let other: Vec<bool> = flags.iter().map(|f| !f).collect();
        row.test = "chi_square".into();
        row.p_unadjusted = ctx.block_test(&[flags.clone(), other]);
        row.p_adjusted = ctx.block_adjusted(&[flags])?;
        rows.push(row);
    }

    for v in Variable::ALL {
        let vals: Vec<Option<f64>> = stays.iter().map(|s| first_hours_mean(s, v)).collect();
        rows.push(ctx.continuous(v.name(), &vals, true)?);
    }

    let egfr: Vec<Option<f64>> = stays
        .iter()
        .map(|s| {
            first_hours_mean(s, Variable::Creatinine)
                .and_then(|scr| egfr_mdrd(scr, s.age, s.sex, s.ethnicity).ok())
        })
        .collect();
    rows.push(ctx.continuous("egfr", &egfr, true)?);

    for r in &mut rows {
        if k < 2 {
            r.test.clear();
        }
    }
    Ok(SubtypeReport {
        k,
        cluster_sizes: sizes,
        rows,
    })
}

fn fmt_p(p: Option<f64>) -> String {
    match p {
        None => "-".into(),
        Some(p) if p < 0.001 => "<0.001".into(),
        Some(p) => format!("{p:.3}"),
    }
}

impl SubtypeReport {
    /// Fixed-width table for reading in a terminal.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<22}", "variable");
        for (c, n) in self.cluster_sizes.iter().enumerate() {
            let _ = write!(out, "{:>22}", format!("subtype {} (n={n})", c + 1));
        }
        let _ = writeln!(out, "{:>10}{:>10}  pairs", "p", "p_adj");
        for r in &self.rows {
            let _ = write!(out, "{:<22}", r.name);
            for c in &r.cells {
                let _ = write!(out, "{c:>22}");
            }
            let pairs: Vec<String> = r
                .significant_pairs
                .iter()
                .map(|(i, j)| format!("{}-{}", i + 1, j + 1))
                .collect();
            let _ = writeln!(
                out,
                "{:>10}{:>10}  {}",
                fmt_p(r.p_unadjusted),
                fmt_p(r.p_adjusted),
                pairs.join(" ")
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub variables: Vec<String>,
    /// `values[v][c]`: cluster mean of variable `v` in pooled standard units.
    pub values: Vec<Vec<f64>>,
}

/// Per-cluster z-scored means of the continuous rows with a significant
/// unadjusted test.
pub fn heatmap_matrix(report: &SubtypeReport) -> Heatmap {
    let mut variables = Vec::new();
    let mut values = Vec::new();
    for r in &report.rows {
        if r.kind == RowKind::Continuous && r.significant() && r.pooled_sd > 0.0 {
            variables.push(r.name.clone());
            values.push(
                r.cluster_values
                    .iter()
                    .map(|m| (m - r.pooled_mean) / r.pooled_sd)
                    .collect(),
            );
        }
    }
    Heatmap { variables, values }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageComposition {
    /// `counts[c][s - 1]` cases of stage `s` in cluster `c`.
    pub counts: Vec<[usize; 3]>,
    pub percentages: Vec<[f64; 3]>,
}

impl StageComposition {
    /// Most frequent stage of a cluster (lowest stage on ties).
    pub fn modal_stage(&self, c: usize) -> u8 {
        let row = self.counts[c];
        let mut best = 0;
        for s in 1..3 {
            if row[s] > row[best] {
                best = s;
            }
        }
        best as u8 + 1
    }

    pub fn modal_share(&self, c: usize) -> f64 {
        self.percentages[c][self.modal_stage(c) as usize - 1] / 100.0
    }
}

/// Cluster x KDIGO stage cross-tabulation.
pub fn stage_composition(clusters: &[usize], stages: &[Option<u8>]) -> Result<StageComposition> {
    if clusters.len() != stages.len() {
        return Err(Error::Dimension(format!(
            "{} cluster ids but {} stages",
            clusters.len(),
            stages.len()
        )));
    }
    let k = clusters.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![[0usize; 3]; k];
    for (i, (&c, s)) in clusters.iter().zip(stages).enumerate() {
        match s {
            Some(s @ 1..=3) => counts[c][*s as usize - 1] += 1,
            _ => return Err(Error::Data(format!("case {i} has no KDIGO stage"))),
        }
    }
    let percentages = counts
        .iter()
        .map(|row| {
            let n: usize = row.iter().sum();
            let mut p = [0.0; 3];
            if n > 0 {
                for s in 0..3 {
                    p[s] = 100.0 * row[s] as f64 / n as f64;
                }
            }
            p
        })
        .collect();
    Ok(StageComposition {
        counts,
        percentages,
    })
}
