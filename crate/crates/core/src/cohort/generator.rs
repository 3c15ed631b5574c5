use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use super::vocab::{MARKER_WORDS, RISK_WORDS};
use super::{
    ClinicalNote, Comorbidities, Ethnicity, EventSeries, IcuStay, Medications, Sex, Variable,
    VariableKind, Vocabulary,
};
use crate::numeric::sigmoid;
use crate::util::rng_for;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CohortConfig {
    pub n_stays: usize,
    pub case_fraction: f64,
    pub subtype_mixture: [f64; 3],
    pub vocab_size: usize,
    /// Multiplies the between-patient and measurement spread.
    pub noise_scale: f64,
    /// Mean of the latent risk scores of cases (controls have mean 0).
    pub risk_shift: f64,
    /// Each case expresses its risk shift in only one modality, structured
    /// or notes, chosen with equal probability.
    pub complementary_modalities: bool,
    pub seed: u64,
}

fn default_risk_shift() -> f64 {
    1.0
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            n_stays: 1000,
            case_fraction: 0.2,
            subtype_mixture: [0.5946, 0.0878, 0.3176],
            vocab_size: 200,
            noise_scale: 1.0,
            risk_shift: default_risk_shift(),
            complementary_modalities: false,
            seed: 0,
        }
    }
}

impl CohortConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_stays == 0 {
            return Err(Error::Config("n_stays must be positive".into()));
        }
        if !(self.case_fraction > 0.0 && self.case_fraction < 1.0) {
            return Err(Error::Config(format!(
                "case_fraction must lie in (0, 1), got {}",
                self.case_fraction
            )));
        }
        if self
            .subtype_mixture
            .iter()
            .any(|w| !(*w >= 0.0) || !w.is_finite())
        {
            return Err(Error::Config(
                "subtype_mixture weights must be non-negative".into(),
            ));
        }
        let total: f64 = self.subtype_mixture.iter().sum();
        if total <= 0.0 {
            return Err(Error::Config(
                "subtype_mixture has no positive weight".into(),
            ));
        }
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "subtype_mixture must sum to 1, got {total}"
            )));
        }
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return Err(Error::Config("noise_scale must be non-negative".into()));
        }
        if !self.risk_shift.is_finite() {
            return Err(Error::Config("risk_shift must be finite".into()));
        }
        Ok(())
    }
}

// Per-archetype (mean, sd) of each variable, indexed like `Variable::ALL`.
const PROFILE: [[(f64, f64); 21]; 3] = [
    [
        (58.64, 12.24),
        (134.32, 40.66),
        (87.22, 17.09),
        (76.09, 13.25),
        (18.08, 4.44),
        (96.37, 1.97),
        (115.67, 15.94),
        (36.85, 0.62),
        (23.87, 4.16),
        (28.66, 22.74),
        (8.36, 0.73),
        (105.19, 5.45),
        (1.55, 0.34),
        (13.55, 1.76),
        (1.47, 0.72),
        (242.08, 43.63),
        (4.24, 0.56),
        (15.45, 5.76),
        (35.12, 18.55),
        (10.59, 8.72),
        (1.35, 0.24),
    ],
    [
        (61.13, 12.53),
        (145.56, 46.67),
        (90.65, 16.26),
        (78.46, 13.67),
        (20.26, 4.75),
        (96.27, 2.16),
        (120.22, 18.11),
        (36.82, 0.66),
        (24.70, 4.83),
        (28.65, 24.77),
        (8.40, 0.74),
        (102.22, 5.90),
        (1.96, 0.49),
        (17.18, 1.55),
        (1.54, 1.04),
        (384.96, 115.46),
        (4.25, 0.56),
        (17.30, 7.45),
        (39.24, 14.42),
        (15.71, 7.97),
        (1.02, 0.25),
    ],
    [
        (60.45, 12.62),
        (144.22, 46.67),
        (86.12, 15.09),
        (79.02, 11.40),
        (19.19, 4.01),
        (97.23, 2.13),
        (120.43, 17.63),
        (36.82, 0.62),
        (24.51, 4.60),
        (27.66, 21.34),
        (8.78, 0.70),
        (103.38, 5.62),
        (1.69, 0.32),
        (15.53, 1.91),
        (1.47, 0.94),
        (265.31, 44.64),
        (4.22, 0.54),
        (15.55, 6.38),
        (36.94, 17.18),
        (13.23, 5.14),
        (1.19, 0.25),
    ],
];

const AGE: [(f64, f64); 3] = [(63.03, 17.25), (66.81, 10.43), (65.07, 11.32)];
const FEMALE: [f64; 3] = [0.3569, 0.5387, 0.4515];
const ETHNICITY: [[f64; 4]; 3] = [
    [0.2029, 0.5522, 0.1480, 0.0969],
    [0.1399, 0.6890, 0.1071, 0.0640],
    [0.2479, 0.5407, 0.1678, 0.0439],
];
const MEDS: [[f64; 4]; 3] = [
    [0.1320, 0.1219, 0.10, 0.1408],
    [0.2544, 0.2485, 0.10, 0.2589],
    [0.1669, 0.1641, 0.10, 0.1719],
];
const COMORBID: [[f64; 9]; 3] = [
    [
        0.6016, 0.1487, 0.6060, 0.3095, 0.1322, 0.1245, 0.3584, 0.0901, 0.0441,
    ],
    [
        0.6563, 0.1711, 0.6027, 0.4435, 0.1533, 0.1473, 0.4776, 0.1205, 0.0685,
    ],
    [
        0.6299, 0.1871, 0.5892, 0.4445, 0.1402, 0.1497, 0.4975, 0.1197, 0.0613,
    ],
];

// Creatinine baseline truncation bounds per archetype; archetype II uses
// a symmetric +-3 sd window so its mean is preserved.
const SCR_BOUNDS: [(f64, f64); 3] = [(0.75, 2.35), (f64::NAN, f64::NAN), (1.03, 2.35)];

/// Peak creatinine kept below the 4.0 mg/dL absolute stage-3 trigger for
/// archetypes I and III.
const PEAK_CAP: f64 = 3.85;

/// Variables shifted by the structured latent risk, with direction.
const RISK_VARS: [(Variable, f64); 5] = [
    (Variable::Bun, 1.0),
    (Variable::Urine, -1.0),
    (Variable::HeartRate, 1.0),
    (Variable::RespRate, 1.0),
    (Variable::Wbc, 1.0),
];
const RISK_COEF: f64 = 0.6;
/// Multiplier of `risk_shift` for cases of each archetype, ordered like the
/// stage each archetype tends to reach.
const SEVERITY: [f64; 3] = [1.0, 3.0, 2.0];

const OBS_HOURS: f64 = 48.0;
const BIN: f64 = 2.0;
const DROP_P: f64 = 0.15;
const URINE_FLOOR: f64 = 0.55;
const REUSE_PATIENT_P: f64 = 0.1;
const MARKER_P: f64 = 0.15;
const OOV_P: f64 = 0.03;

/// Deterministic synthetic cohort with planted archetypes.
pub fn generate_cohort(config: &CohortConfig) -> Result<(Vec<IcuStay>, Vocabulary)> {
    config.validate()?;
    let vocab = Vocabulary::synthetic(config.vocab_size)?;
    let mixture = WeightedIndex::new(config.subtype_mixture)
        .map_err(|e| Error::Config(format!("subtype_mixture: {e}")))?;
    let mut top = rng_for(config.seed, "cohort");
    let mut stays: Vec<IcuStay> = Vec::with_capacity(config.n_stays);
    let mut next_patient = 0usize;
    for i in 0..config.n_stays {
        let is_case = top.random_bool(config.case_fraction);
        let archetype = mixture.sample(&mut top);
        let reuse = i > 0 && top.random_bool(REUSE_PATIENT_P);
        let previous = if reuse { stays.last() } else { None };
        let patient_id = match previous {
            Some(p) => p.patient_id.clone(),
            None => {
                next_patient += 1;
                format!("P{next_patient:06}")
            }
        };
        let mut rng = rng_for(config.seed, &format!("stay/{i}"));
        let stay = generate_stay(
            &mut rng,
            config,
            &vocab,
            format!("S{:06}", i + 1),
            patient_id,
            previous,
            archetype,
            is_case,
        )?;
        stays.push(stay);
    }
    Ok((stays, vocab))
}

#[allow(clippy::too_many_arguments)]
fn generate_stay(
    rng: &mut ChaCha8Rng,
    config: &CohortConfig,
    vocab: &Vocabulary,
    stay_id: String,
    patient_id: String,
    previous: Option<&IcuStay>,
    a: usize,
    is_case: bool,
) -> Result<IcuStay> {
    let ns = config.noise_scale;
    let los = rng.random_range(220.0..240.0);

    let (age, sex, ethnicity, weight) = match previous {
        Some(p) => (
            p.age + rng.random_range(0.0..1.0),
            p.sex,
            p.ethnicity,
            p.weight_kg,
        ),
        None => {
            let age = truncated_normal(rng, AGE[a].0, AGE[a].1, 18.0, 95.0);
            let sex = if rng.random_bool(FEMALE[a]) {
                Sex::Female
            } else {
                Sex::Male
            };
            let eth = WeightedIndex::new(ETHNICITY[a]).expect("static weights");
            let ethnicity = Ethnicity::ALL[eth.sample(rng)];
            let weight = truncated_normal(rng, 80.0, 15.0, 45.0, 150.0);
            (age, sex, ethnicity, Some(weight))
        }
    };
    let medications = Medications::from_array(MEDS[a].map(|p| rng.random_bool(p)));
    let comorbidities = Comorbidities::from_array(COMORBID[a].map(|p| rng.random_bool(p)));

    let shift = if is_case { config.risk_shift * SEVERITY[a] } else { 0.0 };
    let (shift_struct, shift_notes) = if is_case && config.complementary_modalities {
        if rng.random_bool(0.5) {
            (shift, 0.0)
        } else {
            (0.0, shift)
        }
    } else {
        (shift, shift)
    };
    let r_struct = shift_struct + ns * standard_normal(rng);
    let r_notes = shift_notes + ns * standard_normal(rng);

    // Patient-level level of each variable.
    let mut level = [0.0; 21];
    for v in Variable::ALL {
        let (m, sd) = PROFILE[a][v.index()];
        level[v.index()] = m + sd * ns * standard_normal(rng);
    }
    for (v, dir) in RISK_VARS {
        level[v.index()] += dir * RISK_COEF * r_struct * PROFILE[a][v.index()].1;
    }
    let b = creatinine_baseline(rng, a, ns);
    level[Variable::Creatinine.index()] = b;

    let plan = if is_case {
        Some(plan_trajectory(rng, a, b))
    } else {
        None
    };
    let rrt = plan.as_ref().is_some_and(|p| p.rrt);

    let mut chart_series = BTreeMap::new();
    let mut lab_series = BTreeMap::new();
    for v in Variable::ALL {
        let points = match v {
            Variable::Creatinine => creatinine_points(rng, b, plan.as_ref(), ns, los),
            Variable::Urine => urine_points(rng, level[v.index()], plan.as_ref(), ns, los),
            _ => {
                let (m, sd) = PROFILE[a][v.index()];
                let floor = 0.05 * m;
                binned_points(rng, OBS_HOURS, |r| {
                    (level[v.index()] + 0.1 * sd * ns * standard_normal(r)).max(floor)
                })
            }
        };
        let series = EventSeries::new(v, points);
        match v.kind() {
            VariableKind::Chart => chart_series.insert(v, series),
            VariableKind::Lab => lab_series.insert(v, series),
        };
    }

    let notes = generate_notes(rng, vocab, a, r_notes);

    let stay = IcuStay {
        stay_id,
        patient_id,
        age,
        sex,
        ethnicity,
        weight_kg: weight,
        medications,
        comorbidities,
        los_hours: los,
        rrt,
        chart_series,
        lab_series,
        notes,
        planted_subtype: is_case.then_some(a as u8 + 1),
    };
    stay.validate()?;
    Ok(stay)
}

struct Trajectory {
    onset: f64,
    ramp: f64,
    ratio: f64,
    /// (start, duration, low, high) of planted oliguria.
    oliguria: Option<(f64, f64, f64, f64)>,
    rrt: bool,
}

fn plan_trajectory(rng: &mut ChaCha8Rng, a: usize, b: f64) -> Trajectory {
    let onset = rng.random_range(56.0..140.0);
    let ramp = rng.random_range(18.0..36.0);
    let mut oliguria = None;
    let mut rrt = false;
    let ratio = match a {
        0 => rng.random_range(1.6..=1.85f64.min(PEAK_CAP / b)),
        1 => {
            let start = onset + rng.random_range(0.0..ramp);
            oliguria = Some((start, rng.random_range(28.0..40.0), 0.1, 0.28));
            rrt = rng.random_bool(0.1);
            rng.random_range(3.1..3.8)
        }
        _ => {
            if 2.15 * b < PEAK_CAP {
                rng.random_range(2.15..=2.6f64.min(PEAK_CAP / b))
            } else {
                let start = onset + rng.random_range(0.0..ramp);
                oliguria = Some((start, rng.random_range(15.0..20.0), 0.32, 0.45));
                rng.random_range(1.6..=1.85f64.min(PEAK_CAP / b))
            }
        }
    };
    Trajectory {
        onset,
        ramp,
        ratio,
        oliguria,
        rrt,
    }
}

fn creatinine_baseline(rng: &mut ChaCha8Rng, a: usize, ns: f64) -> f64 {
    let (m, sd) = PROFILE[a][Variable::Creatinine.index()];
    let (lo, hi) = if a == 1 {
        let half = (3.0 * sd * ns).min(m - 0.3);
        (m - half, m + half)
    } else {
        SCR_BOUNDS[a]
    };
    truncated_normal(rng, m, sd * ns, lo, hi)
}

fn creatinine_points(
    rng: &mut ChaCha8Rng,
    b: f64,
    plan: Option<&Trajectory>,
    ns: f64,
    los: f64,
) -> Vec<(f64, f64)> {
    let level = |t: f64| match plan {
        Some(p) => b * (1.0 + (p.ratio - 1.0) * ((t - p.onset) / p.ramp).clamp(0.0, 1.0)),
        None => b,
    };
    let mut points = binned_points(rng, OBS_HOURS, |_| 0.0);
    let mut t = OBS_HOURS + rng.random_range(0.0..6.0);
    while t < los {
        points.push((t, 0.0));
        t += 6.0;
    }
    for p in &mut points {
        p.1 = (level(p.0) + 0.02 * ns * standard_normal(rng)).max(0.1);
    }
    points
}

fn urine_points(
    rng: &mut ChaCha8Rng,
    level: f64,
    plan: Option<&Trajectory>,
    ns: f64,
    los: f64,
) -> Vec<(f64, f64)> {
    let (_, sd) = PROFILE[0][Variable::Urine.index()];
    let mut points = binned_points(rng, OBS_HOURS, |_| 0.0);
    let mut t = OBS_HOURS + rng.random_range(0.0..BIN);
    while t < los {
        points.push((t, 0.0));
        t += BIN;
    }
    for p in &mut points {
        let oliguric = plan
            .and_then(|pl| pl.oliguria)
            .filter(|(start, dur, _, _)| p.0 >= *start && p.0 < start + dur);
        p.1 = match oliguric {
            Some((_, _, lo, hi)) => rng.random_range(lo..hi),
            None => (level + 0.1 * sd * ns * standard_normal(rng)).max(URINE_FLOOR),
        };
    }
    points
}

/// One observation per 2-hour bin of `[0, hours)` at a random offset within
/// the bin, each dropped independently with probability `DROP_P`.
fn binned_points(
    rng: &mut ChaCha8Rng,
    hours: f64,
    mut value: impl FnMut(&mut ChaCha8Rng) -> f64,
) -> Vec<(f64, f64)> {
    let n_bins = (hours / BIN) as usize;
    let mut out = Vec::with_capacity(n_bins);
    for j in 0..n_bins {
        let t = j as f64 * BIN + rng.random_range(0.0..BIN);
        let drop = rng.random_bool(DROP_P);
        let v = value(rng);
        if !drop {
            out.push((t, v));
        }
    }
    out
}

fn generate_notes(
    rng: &mut ChaCha8Rng,
    vocab: &Vocabulary,
    a: usize,
    r_notes: f64,
) -> Vec<ClinicalNote> {
    let p_risk = sigmoid(-2.2 + 0.9 * r_notes);
    let fillers = vocab.fillers();
    let n_notes = rng.random_range(2..=5);
    let mut notes: Vec<ClinicalNote> = (0..n_notes)
        .map(|_| {
            let offset_hours = rng.random_range(0.0..OBS_HOURS);
            let len = rng.random_range(8..=20);
            let tokens = (0..len)
                .map(|_| {
                    if rng.random_bool(p_risk) {
                        RISK_WORDS[rng.random_range(0..RISK_WORDS.len())].to_string()
                    } else if rng.random_bool(MARKER_P) {
                        MARKER_WORDS[a][rng.random_range(0..4)].to_string()
                    } else if rng.random_bool(OOV_P) {
                        format!("x{:04}", rng.random_range(0..10_000))
                    } else {
                        fillers[rng.random_range(0..fillers.len())].clone()
                    }
                })
                .collect();
            ClinicalNote {
                offset_hours,
                tokens,
            }
        })
        .collect();
    notes.sort_by(|x, y| x.offset_hours.total_cmp(&y.offset_hours));
    notes
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").sample(rng)
}

/// Rejection sampler for a normal truncated to `[lo, hi]`.
fn truncated_normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    if sd <= 0.0 {
        return mean.clamp(lo, hi);
    }
    for _ in 0..10_000 {
        let x = mean + sd * standard_normal(rng);
        if x >= lo && x <= hi {
            return x;
        }
    }
    mean.clamp(lo, hi)
}
