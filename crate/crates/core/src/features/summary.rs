use serde::{Deserialize, Serialize};

use crate::cohort::{IcuStay, Variable};
use crate::kdigo::egfr_mdrd;

use super::{static_vector, BIN_HOURS, STATIC_DIM};

/// Variables summarised with seven statistics. Urine is reduced to its mean,
/// and mean BP and INR are left out because they are derived from systolic
/// and diastolic pressure and from PT respectively.
pub const SUMMARY_VARIABLES: [Variable; 18] = [
    Variable::DiasBp,
    Variable::Glucose,
    Variable::HeartRate,
    Variable::RespRate,
    Variable::SpO2,
    Variable::SysBp,
    Variable::Temp,
    Variable::Bicarbonate,
    Variable::Bun,
    Variable::Calcium,
    Variable::Chloride,
    Variable::Creatinine,
    Variable::Hemoglobin,
    Variable::Platelet,
    Variable::Potassium,
    Variable::Pt,
    Variable::Ptt,
    Variable::Wbc,
];

const STATS: [&str; 7] = ["first", "last", "avg", "min", "max", "slope", "count"];

/// 18 x 7 statistics, urine mean, minimum eGFR, and 19 static entries.
pub const BASELINE_DIM: usize = SUMMARY_VARIABLES.len() * 7 + 2 + (STATIC_DIM - 1);

/// Engineered summary of a stay's observation window.
///
/// `missing[k]` marks entries that had no data; their value is a 0 placeholder
/// to be imputed from training statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFeatureVector {
    pub values: Vec<f64>,
    pub missing: Vec<bool>,
}

pub fn baseline_feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(BASELINE_DIM);
    for v in SUMMARY_VARIABLES {
        for s in STATS {
            names.push(format!("{}_{s}", v.name()));
        }
    }
    names.push("urine_avg".into());
    names.push("egfr_min".into());
    let statics = super::static_feature_names();
    // the male indicator is implied by the female one
    names.extend(statics.into_iter().filter(|n| n != "sex_male"));
    names
}

/// Least-squares slope of `(bin, value)` pairs; 0 with fewer than two bins.
fn slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx
}

/// First/last/mean/min/max over raw observations in `[0, t1)`, slope per
/// 2-hour bin over bin means, and the raw observation count.
pub fn summarize_for_baselines(stay: &IcuStay, t1_hours: f64) -> BaselineFeatureVector {
    let mut values = Vec::with_capacity(BASELINE_DIM);
    let mut missing = Vec::with_capacity(BASELINE_DIM);
    for v in SUMMARY_VARIABLES {
        let pts: Vec<(f64, f64)> = stay
            .series(v)
            .map(|s| s.between(0.0, t1_hours).collect())
            .unwrap_or_default();
        if pts.is_empty() {
            values.extend([0.0; 6]);
            missing.extend([true; 6]);
            values.push(0.0);
            missing.push(false);
            continue;
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let n = xs.len() as f64;
        let mut bins: Vec<(f64, f64, usize)> = Vec::new();
        for &(t, x) in &pts {
            let b = (t / BIN_HOURS).floor();
            match bins.last_mut() {
                Some(last) if last.0 == b => {
                    last.1 += x;
                    last.2 += 1;
                }
                _ => bins.push((b, x, 1)),
            }
        }
        let bin_means: Vec<(f64, f64)> = bins.iter().map(|b| (b.0, b.1 / b.2 as f64)).collect();
        values.extend([
            xs[0],
            xs[xs.len() - 1],
            xs.iter().sum::<f64>() / n,
            xs.iter().copied().fold(f64::INFINITY, f64::min),
            xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            slope(&bin_means),
            n,
        ]);
        missing.extend([false; 7]);
    }

    let urine: Vec<f64> = stay
        .series(Variable::Urine)
        .map(|s| s.between(0.0, t1_hours).map(|p| p.1).collect())
        .unwrap_or_default();
    values.push(if urine.is_empty() {
        0.0
    } else {
        urine.iter().sum::<f64>() / urine.len() as f64
    });
    missing.push(urine.is_empty());

    let egfr_min = stay
        .series(Variable::Creatinine)
        .into_iter()
        .flat_map(|s| s.between(0.0, t1_hours))
        .filter_map(|(_, scr)| egfr_mdrd(scr, stay.age, stay.sex, stay.ethnicity).ok())
        .fold(f64::INFINITY, f64::min);
    values.push(if egfr_min.is_finite() { egfr_min } else { 0.0 });
    missing.push(!egfr_min.is_finite());

    let st = static_vector(stay);
    values.push(st[0]);
    values.extend_from_slice(&st[2..]);
    missing.extend([false; STATIC_DIM - 1]);

    debug_assert_eq!(values.len(), BASELINE_DIM);
    BaselineFeatureVector { values, missing }
}
