//! KDIGO case definition, staging, MDRD eGFR and cohort exclusions.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::cohort::{Ethnicity, EventSeries, IcuStay, Sex, Variable};
use crate::{Error, Result};

/// Absolute creatinine rise (mg/dL) within `DELTA_HOURS`.
pub const DELTA_MG_DL: f64 = 0.3;
pub const DELTA_HOURS: f64 = 48.0;
/// Lookback between a baseline and a ratio measurement.
pub const RATIO_LOOKBACK_HOURS: f64 = 168.0;
pub const ABSOLUTE_STAGE3_MG_DL: f64 = 4.0;
/// Rate below which urine output counts as anuria (mL/kg/h).
pub const ANURIA_RATE: f64 = 0.01;
/// Slack for floating-point comparisons against thresholds.
pub const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerRule {
    ScrDelta48h,
    ScrRatio7d,
    Urine6h,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AkiLabel {
    pub is_case: bool,
    pub onset_offset_hours: Option<f64>,
    pub stage: Option<u8>,
    pub triggering_rule: Option<TriggerRule>,
}

impl AkiLabel {
    pub fn control() -> Self {
        Self {
            is_case: false,
            onset_offset_hours: None,
            stage: None,
            triggering_rule: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineScr {
    pub value: f64,
    pub source_window: (f64, f64),
}

/// Half-open labelling window `(start, end]` in hours since admission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, t: f64) -> bool {
        t > self.start && t <= self.end
    }
}

/// MDRD 4-variable eGFR in mL/min/1.73m² (175-coefficient form).
pub fn egfr_mdrd(scr: f64, age: f64, sex: Sex, ethnicity: Ethnicity) -> Result<f64> {
    if !(scr > 0.0) || !(age > 0.0) {
        return Err(Error::Argument(format!(
            "eGFR needs positive creatinine and age, got scr={scr}, age={age}"
        )));
    }
    let mut g = 175.0 * scr.powf(-1.154) * age.powf(-0.203);
    if sex == Sex::Female {
        g *= 0.742;
    }
    if ethnicity == Ethnicity::Black {
        g *= 1.212;
    }
    Ok(g)
}

/// Earliest time in the window at which some pair of measurements at most
/// 48 h apart rises by at least 0.3 mg/dL, paired with the later value.
///
/// Uses a monotone deque for the trailing 48 h minimum, so every measurement
/// is compared with the smallest value that precedes it within 48 h.
fn delta_events(scr: &EventSeries, window: Window) -> Vec<(f64, f64)> {
    let pts = &scr.points;
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut out = Vec::new();
    for j in 0..pts.len() {
        let (tj, vj) = pts[j];
        while let Some(&i) = dq.front() {
            if tj - pts[i].0 > DELTA_HOURS + TOL {
                dq.pop_front();
            } else {
                break;
            }
        }
        if let Some(&i) = dq.front() {
            if vj - pts[i].1 >= DELTA_MG_DL - TOL && window.contains(tj) {
                out.push((tj, vj));
            }
        }
        while let Some(&i) = dq.back() {
            if pts[i].1 >= vj {
                dq.pop_back();
            } else {
                break;
            }
        }
        dq.push_back(j);
    }
    out
}

/// In-window measurements eligible for the ratio criterion, as (time, ratio).
fn ratio_points(scr: &EventSeries, baseline: &BaselineScr, window: Window) -> Vec<(f64, f64)> {
    scr.points
        .iter()
        .filter(|(t, _)| {
            let lag = t - baseline.source_window.1;
            window.contains(*t) && lag >= -TOL && lag <= RATIO_LOOKBACK_HOURS + TOL
        })
        .map(|&(t, v)| (t, v / baseline.value))
        .collect()
}

/// Earliest in-window time at which the rate has stayed below `threshold`
/// for `hours`, treating the rate as constant until the next measurement.
fn urine_onset(urine: &EventSeries, threshold: f64, hours: f64, window: Window) -> Option<f64> {
    let pts = &urine.points;
    let mut best: Option<f64> = None;
    let mut i = 0;
    while i < pts.len() {
        if pts[i].1 >= threshold {
            i += 1;
            continue;
        }
        let start = pts[i].0;
        let mut k = i;
        while k + 1 < pts.len() && pts[k + 1].1 < threshold {
            k += 1;
        }
        let end = if k + 1 < pts.len() {
            pts[k + 1].0
        } else {
            pts[k].0
        };
        let fire = start + hours;
        if end - start >= hours - TOL && window.contains(fire) {
            best = Some(best.map_or(fire, |b: f64| b.min(fire)));
        }
        i = k + 1;
    }
    best
}

fn check_inputs(scr: &EventSeries, urine: &EventSeries) -> Result<()> {
    if scr.is_empty() && urine.is_empty() {
        return Err(Error::InsufficientData(
            "no creatinine and no urine measurements".into(),
        ));
    }
    Ok(())
}

/// Case/control decision over `window`; the returned label carries no stage.
pub fn detect_aki(
    scr: &EventSeries,
    urine: &EventSeries,
    baseline: Option<&BaselineScr>,
    window: Window,
) -> Result<AkiLabel> {
    check_inputs(scr, urine)?;
    let mut candidates: Vec<(f64, TriggerRule)> = Vec::new();
    if let Some((t, _)) = delta_events(scr, window).first() {
        candidates.push((*t, TriggerRule::ScrDelta48h));
    }
    if let Some(b) = baseline {
        if let Some((t, _)) = ratio_points(scr, b, window)
            .into_iter()
            .find(|(_, r)| *r >= 1.5 - TOL)
        {
            candidates.push((t, TriggerRule::ScrRatio7d));
        }
    }
    if let Some(t) = urine_onset(urine, 0.5, 6.0, window) {
        candidates.push((t, TriggerRule::Urine6h));
    }
    // Stable sort keeps the rule order above on equal onsets.
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(match candidates.first() {
        Some(&(t, rule)) => AkiLabel {
            is_case: true,
            onset_offset_hours: Some(t),
            stage: None,
            triggering_rule: Some(rule),
        },
        None => AkiLabel::control(),
    })
}

/// Highest KDIGO stage reached by any staging clause inside `window`.
pub fn stage_aki(
    scr: &EventSeries,
    urine: &EventSeries,
    baseline: Option<&BaselineScr>,
    window: Window,
    rrt: bool,
) -> Result<u8> {
    let label = detect_aki(scr, urine, baseline, window)?;
    if !label.is_case {
        return Err(Error::Contract(
            "stage_aki called on a window without AKI".into(),
        ));
    }
    let mut stage = 1u8;
    if let Some(b) = baseline {
        let peak = ratio_points(scr, b, window)
            .into_iter()
            .map(|(_, r)| r)
            .fold(0.0, f64::max);
        if peak >= 3.0 - TOL {
            stage = 3;
        } else if peak >= 2.0 - TOL {
            stage = stage.max(2);
        }
    }
    if delta_events(scr, window)
        .iter()
        .any(|(_, v)| *v >= ABSOLUTE_STAGE3_MG_DL - TOL)
    {
        stage = 3;
    }
    if urine_onset(urine, 0.3, 24.0, window).is_some()
        || urine_onset(urine, ANURIA_RATE, 12.0, window).is_some()
    {
        stage = 3;
    } else if urine_onset(urine, 0.5, 12.0, window).is_some() {
        stage = stage.max(2);
    }
    if rrt {
        stage = 3;
    }
    Ok(stage)
}

/// Minimum creatinine in `[max(0, t1 - 168), t1]`, falling back to the
/// earliest measurement when that range is empty.
pub fn prediction_baseline(scr: &EventSeries, t1: f64) -> Option<BaselineScr> {
    let lo = (t1 - RATIO_LOOKBACK_HOURS).max(0.0);
    let min = scr
        .points
        .iter()
        .filter(|(t, _)| *t >= lo && *t <= t1)
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min);
    if min.is_finite() {
        return Some(BaselineScr {
            value: min,
            source_window: (lo, t1),
        });
    }
    scr.points.first().map(|&(t, v)| BaselineScr {
        value: v,
        source_window: (t, t),
    })
}

/// Earliest creatinine measurement, used when checking the observation window.
pub fn admission_baseline(scr: &EventSeries) -> Option<BaselineScr> {
    scr.points.first().map(|&(t, v)| BaselineScr {
        value: v,
        source_window: (t, t),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub stay_id: String,
    pub reason: String,
}

pub const REASON_AKI_IN_OBSERVATION: &str = "aki_in_observation_window";
pub const REASON_MISSING_PREDICTION_DATA: &str = "missing_scr_and_urine_in_prediction_window";

/// A retained stay's index in the input plus its prediction-window label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledStay {
    pub index: usize,
    pub label: AkiLabel,
}

fn stay_series(stay: &IcuStay) -> Result<(EventSeries, EventSeries)> {
    let scr = stay
        .series(Variable::Creatinine)
        .cloned()
        .unwrap_or_else(|| EventSeries::empty(Variable::Creatinine));
    let urine = stay
        .series(Variable::Urine)
        .cloned()
        .unwrap_or_else(|| EventSeries::empty(Variable::Urine));
    if !urine.is_empty() && stay.weight_kg.is_none() {
        return Err(Error::Data(format!(
            "stay {} has urine output but no weight for rate normalisation",
            stay.stay_id
        )));
    }
    Ok((scr, urine))
}

/// Labels the prediction window `(t1, t1 + 24 t2_days]` of one stay.
pub fn label_stay(stay: &IcuStay, t1: f64, t2_days: f64) -> Result<AkiLabel> {
    let (scr, urine) = stay_series(stay)?;
    let window = Window::new(t1, t1 + 24.0 * t2_days);
    let baseline = prediction_baseline(&scr, t1);
    let mut label = detect_aki(&scr, &urine, baseline.as_ref(), window)?;
    if label.is_case {
        label.stage = Some(stage_aki(
            &scr,
            &urine,
            baseline.as_ref(),
            window,
            stay.rrt,
        )?);
    }
    Ok(label)
}

/// Drops stays with AKI in `[0, t1]` or without any creatinine/urine data in
/// the prediction window, and labels the rest.
pub fn apply_exclusions(
    stays: &[IcuStay],
    t1_hours: f64,
    t2_days: f64,
) -> Result<(Vec<LabeledStay>, Vec<Exclusion>)> {
    let mut kept = Vec::new();
    let mut log = Vec::new();
    let pred = Window::new(t1_hours, t1_hours + 24.0 * t2_days);
    for (index, stay) in stays.iter().enumerate() {
        let (scr, urine) = stay_series(stay)?;
        let exclude = |reason: &str| Exclusion {
            stay_id: stay.stay_id.clone(),
            reason: reason.to_string(),
        };
        if scr.is_empty() && urine.is_empty() {
            log.push(exclude(REASON_MISSING_PREDICTION_DATA));
            continue;
        }
        let obs = Window::new(f64::NEG_INFINITY, t1_hours);
        let early = detect_aki(&scr, &urine, admission_baseline(&scr).as_ref(), obs)?;
        if early.is_case {
            log.push(exclude(REASON_AKI_IN_OBSERVATION));
            continue;
        }
        let has_data = scr
            .points
            .iter()
            .chain(&urine.points)
            .any(|(t, _)| pred.contains(*t));
        if !has_data {
            log.push(exclude(REASON_MISSING_PREDICTION_DATA));
            continue;
        }
        kept.push(LabeledStay {
            index,
            label: label_stay(stay, t1_hours, t2_days)?,
        });
    }
    Ok((kept, log))
}
