//! Binning, imputation and scaling of structured series, static encodings,
//! engineered summaries for the baselines, and note encodings.

mod summary;

use serde::{Deserialize, Serialize};

use crate::cohort::{Ethnicity, IcuStay, Sex, Variable, Vocabulary, PAD};
use crate::{Error, Result};

pub use summary::{
    baseline_feature_names, summarize_for_baselines, BaselineFeatureVector, BASELINE_DIM,
    SUMMARY_VARIABLES,
};

/// Sub-window length in hours.
pub const BIN_HOURS: f64 = 2.0;
/// Structured variables per time step.
pub const D: usize = Variable::COUNT;
pub const STATIC_DIM: usize = 20;

/// `t x d` matrix of per-bin values with an observed/imputed mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StayTensor {
    pub t: usize,
    pub d: usize,
    /// Row-major `t x d`.
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
    /// Split id of the statistics used to scale the tensor, once scaled.
    pub scaled_with: Option<String>,
}

impl StayTensor {
    pub fn get(&self, j: usize, v: usize) -> f64 {
        self.values[j * self.d + v]
    }

    pub fn observed(&self, j: usize, v: usize) -> bool {
        self.mask[j * self.d + v]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.d..(j + 1) * self.d]
    }
}

/// Number of sub-windows for an observation window of `t1_hours`.
pub fn n_bins(t1_hours: f64) -> Result<usize> {
    let t = t1_hours / BIN_HOURS;
    if !(t1_hours > 0.0) || t.fract() != 0.0 {
        return Err(Error::Argument(format!(
            "observation window must be a positive multiple of {BIN_HOURS} h, got {t1_hours}"
        )));
    }
    Ok(t as usize)
}

/// Averages each variable's observations over `[2j, 2j + 2)` for the bins of
/// `[0, t1)`. Unobserved cells hold 0 with mask false.
pub fn bin_events(stay: &IcuStay, t1_hours: f64) -> Result<StayTensor> {
    let t = n_bins(t1_hours)?;
    let mut sums = vec![0.0; t * D];
    let mut counts = vec![0usize; t * D];
    for series in stay.all_series() {
        let v = series.variable.index();
        for (time, value) in series.between(0.0, t1_hours) {
            let j = ((time / BIN_HOURS) as usize).min(t - 1);
            sums[j * D + v] += value;
            counts[j * D + v] += 1;
        }
    }
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    Ok(StayTensor {
        t,
        d: D,
        values,
        mask: counts.iter().map(|&c| c > 0).collect(),
        scaled_with: None,
    })
}

/// Per-variable statistics fitted on one training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStats {
    pub split_id: String,
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalingStats {
    /// Mean, min and max of the observed cells of `train`.
    pub fn fit(train: &[StayTensor], split_id: impl Into<String>) -> Result<Self> {
        let mut sum = vec![0.0; D];
        let mut n = vec![0usize; D];
        let mut min = vec![f64::INFINITY; D];
        let mut max = vec![f64::NEG_INFINITY; D];
        for st in train {
            if st.d != D || st.scaled_with.is_some() {
                return Err(Error::Argument(
                    "scaling statistics must be fitted on raw binned tensors".into(),
                ));
            }
            for j in 0..st.t {
                for v in 0..D {
                    if st.observed(j, v) {
                        let x = st.get(j, v);
                        sum[v] += x;
                        n[v] += 1;
                        min[v] = min[v].min(x);
                        max[v] = max[v].max(x);
                    }
                }
            }
        }
        if let Some(v) = (0..D).find(|&v| n[v] == 0) {
            return Err(Error::Imputation(Variable::ALL[v].name().to_string()));
        }
        Ok(Self {
            split_id: split_id.into(),
            mean: sum.iter().zip(&n).map(|(s, &c)| s / c as f64).collect(),
            min,
            max,
        })
    }

    pub fn scale_value(&self, v: usize, x: f64) -> f64 {
        let range = self.max[v] - self.min[v];
        if range <= 0.0 {
            0.0
        } else {
            ((x - self.min[v]) / range).clamp(0.0, 1.0)
        }
    }

    /// Imputes masked cells with the training mean, then min-max scales.
    /// Tensors already scaled with these statistics are returned unchanged.
    pub fn apply(&self, st: &StayTensor) -> Result<StayTensor> {
        match &st.scaled_with {
            Some(id) if *id == self.split_id => return Ok(st.clone()),
            Some(id) => {
                return Err(Error::Argument(format!(
                    "tensor already scaled with split `{id}`, not `{}`",
                    self.split_id
                )))
            }
            None => {}
        }
        let mut out = st.clone();
        for j in 0..st.t {
            for v in 0..D {
                let raw = if st.observed(j, v) {
                    st.get(j, v)
                } else {
                    self.mean[v]
                };
                out.values[j * D + v] = self.scale_value(v, raw);
            }
        }
        out.scaled_with = Some(self.split_id.clone());
        Ok(out)
    }

    /// Panics-free guard used by evaluators to detect leakage.
    pub fn assert_split(&self, expected: &str) -> Result<()> {
        if self.split_id != expected {
            return Err(Error::Contract(format!(
                "scaling statistics come from split `{}`, expected `{expected}`",
                self.split_id
            )));
        }
        Ok(())
    }
}

/// Fits statistics on `train` and scales every tensor in `targets` with them.
pub fn impute_and_scale(
    train: &[StayTensor],
    split_id: &str,
    targets: &[StayTensor],
) -> Result<(Vec<StayTensor>, ScalingStats)> {
    let stats = ScalingStats::fit(train, split_id)?;
    let scaled = targets
        .iter()
        .map(|t| stats.apply(t))
        .collect::<Result<_>>()?;
    Ok((scaled, stats))
}

/// age/100 (clipped to [0, 1]), sex one-hot, ethnicity one-hot, medication
/// flags, comorbidity flags.
pub fn static_vector(stay: &IcuStay) -> [f64; STATIC_DIM] {
    let mut out = [0.0; STATIC_DIM];
    out[0] = (stay.age / 100.0).clamp(0.0, 1.0);
    out[1 + (stay.sex == Sex::Female) as usize] = 1.0;
    out[3 + stay.ethnicity.index()] = 1.0;
    for (k, f) in stay.medications.as_array().iter().enumerate() {
        out[7 + k] = *f as u8 as f64;
    }
    for (k, f) in stay.comorbidities.as_array().iter().enumerate() {
        out[11 + k] = *f as u8 as f64;
    }
    out
}

pub fn static_feature_names() -> Vec<String> {
    let mut names = vec!["age".to_string(), "sex_male".into(), "sex_female".into()];
    for e in Ethnicity::ALL {
        names.push(format!("ethnicity_{}", format!("{e:?}").to_lowercase()));
    }
    names.extend(
        crate::cohort::Medications::NAMES
            .iter()
            .map(|s| s.to_string()),
    );
    names.extend(
        crate::cohort::Comorbidities::NAMES
            .iter()
            .map(|s| s.to_string()),
    );
    names
}

/// Token-index sequences of the notes written before `until_hours`, in
/// timestamp order. Out-of-vocabulary words are dropped, a note left empty
/// becomes a single padding token, and sequences are cut to `max_note_len`.
pub fn notes_to_sequences(
    stay: &IcuStay,
    vocab: &Vocabulary,
    max_note_len: usize,
    until_hours: f64,
) -> Vec<Vec<usize>> {
    let mut notes: Vec<_> = stay
        .notes
        .iter()
        .filter(|n| n.offset_hours < until_hours)
        .collect();
    notes.sort_by(|a, b| a.offset_hours.total_cmp(&b.offset_hours));
    let pad = vocab.get(PAD).expect("vocabulary reserves padding");
    notes
        .into_iter()
        .map(|n| {
            let mut seq: Vec<usize> = n
                .tokens
                .iter()
                .filter_map(|w| vocab.get(w))
                .take(max_note_len.max(1))
                .collect();
            if seq.is_empty() {
                seq.push(pad);
            }
            seq
        })
        .collect()
}

/// In-vocabulary token counts over the notes written before `until_hours`.
pub fn notes_to_bow(stay: &IcuStay, vocab: &Vocabulary, until_hours: f64) -> Vec<f64> {
    let mut counts = vec![0.0; vocab.len()];
    for n in stay.notes.iter().filter(|n| n.offset_hours < until_hours) {
        for w in &n.tokens {
            if let Some(i) = vocab.get(w) {
                counts[i] += 1.0;
            }
        }
    }
    counts
}
