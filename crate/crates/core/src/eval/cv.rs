use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{auc, precision_recall, stratified_group_folds};
use crate::baselines::{lr_train, HieLstmOnly, LrTrainConfig, LstmBaseline, Standardizer};
use crate::cohort::{IcuStay, Vocabulary};
use crate::features::{
    bin_events, notes_to_bow, notes_to_sequences, static_vector, summarize_for_baselines,
    BaselineFeatureVector, ScalingStats, StayTensor, D, STATIC_DIM,
};
use crate::kdigo::LabeledStay;
use crate::model::{
    predict_proba, train_classifier, Classifier, HyperConfig, MemoryNetwork, StayInput,
};
use crate::util::{derive_seed, mean, sample_sd};
use crate::{Error, Result};

/// Unscaled model inputs of one labelled stay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalStay {
    pub stay_id: String,
    pub patient_id: String,
    pub label: bool,
    pub tensor: StayTensor,
    pub statics: [f64; STATIC_DIM],
    pub notes: Vec<Vec<usize>>,
    pub baseline: BaselineFeatureVector,
    pub bow: Vec<f64>,
}

/// Bins, summarises and tokenises the retained stays.
pub fn prepare_stays(
    stays: &[IcuStay],
    labeled: &[LabeledStay],
    vocab: &Vocabulary,
    t1_hours: f64,
    max_note_len: usize,
) -> Result<Vec<EvalStay>> {
    labeled
        .iter()
        .map(|l| {
            let stay = stays.get(l.index).ok_or_else(|| {
                Error::Argument(format!("labelled index {} out of range", l.index))
            })?;
            Ok(EvalStay {
                stay_id: stay.stay_id.clone(),
                patient_id: stay.patient_id.clone(),
                label: l.label.is_case,
                tensor: bin_events(stay, t1_hours)?,
                statics: static_vector(stay),
                notes: notes_to_sequences(stay, vocab, max_note_len, t1_hours),
                baseline: summarize_for_baselines(stay, t1_hours),
                bow: notes_to_bow(stay, vocab, t1_hours),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    MnHielstm,
    Lstm,
    Hielstm,
    LrStructured,
    LrNotes,
    LrBoth,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::MnHielstm,
        ModelKind::Lstm,
        ModelKind::Hielstm,
        ModelKind::LrStructured,
        ModelKind::LrNotes,
        ModelKind::LrBoth,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ModelKind::MnHielstm => "mn_hielstm",
            ModelKind::Lstm => "lstm",
            ModelKind::Hielstm => "hielstm",
            ModelKind::LrStructured => "lr_structured",
            ModelKind::LrNotes => "lr_notes",
            ModelKind::LrBoth => "lr_both",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::MnHielstm => "MN+HieLSTM",
            ModelKind::Lstm => "LSTM",
            ModelKind::Hielstm => "HieLSTM",
            ModelKind::LrStructured => "LR (structured)",
            ModelKind::LrNotes => "LR (notes)",
            ModelKind::LrBoth => "LR (structured+notes)",
        }
    }

    fn uses_hops(self) -> bool {
        self == ModelKind::MnHielstm
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One point of the tuning grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneParams {
    /// Factor applied to the configured learning rate.
    pub lr_mult: f64,
    pub hops: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvConfig {
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub lr_multipliers: Vec<f64>,
    pub hops_grid: Vec<usize>,
    pub cutoff: f64,
    /// Worker threads for the outer folds.
    pub jobs: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            outer_folds: 5,
            inner_folds: 5,
            lr_multipliers: vec![0.5, 1.0, 2.0],
            hops_grid: vec![1, 2],
            cutoff: 0.5,
            jobs: 1,
            seed: 0,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.outer_folds < 2 || self.inner_folds < 2 {
            return Err(Error::Config(
                "outer_folds and inner_folds must be at least 2".into(),
            ));
        }
        if self.lr_multipliers.is_empty() || self.lr_multipliers.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::Config(
                "lr_multipliers must be non-empty and positive".into(),
            ));
        }
        if self.hops_grid.is_empty() || self.hops_grid.contains(&0) {
            return Err(Error::Config(
                "hops_grid must be non-empty and positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.cutoff) {
            return Err(Error::Config("cutoff must lie in [0, 1]".into()));
        }
        Ok(())
    }

    fn grid(&self, kind: ModelKind, default_hops: usize) -> Vec<TuneParams> {
        let hops: &[usize] = if kind.uses_hops() {
            &self.hops_grid
        } else {
            std::slice::from_ref(&default_hops)
        };
        let mut out = Vec::new();
        for &lr_mult in &self.lr_multipliers {
            for &h in hops {
                out.push(TuneParams { lr_mult, hops: h });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub model: ModelKind,
    pub fold: usize,
    pub auc: f64,
    pub precision: f64,
    pub recall: f64,
    pub precision_defined: bool,
    pub chosen: TuneParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: ModelKind,
    pub auc: (f64, f64),
    pub precision: (f64, f64),
    pub recall: (f64, f64),
}

impl SummaryRow {
    pub fn cells(&self) -> [String; 4] {
        let f = |(m, s): (f64, f64)| format!("{m:.4} ± {s:.4}");
        [
            self.model.display_name().to_string(),
            f(self.auc),
            f(self.precision),
            f(self.recall),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub records: Vec<MetricRecord>,
    pub summary: Vec<SummaryRow>,
}

impl CvReport {
    pub fn row(&self, model: ModelKind) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.model == model)
    }
}

fn neural_inputs(
    data: &[EvalStay],
    idx: &[usize],
    stats: &ScalingStats,
    split_id: &str,
) -> Result<Vec<StayInput>> {
    stats.assert_split(split_id)?;
    idx.iter()
        .map(|&i| {
            let s = &data[i];
            Ok(StayInput {
                tensor: stats.apply(&s.tensor)?,
                statics: s.statics,
                notes: s.notes.clone(),
            })
        })
        .collect()
}

fn lr_rows(data: &[EvalStay], idx: &[usize], kind: ModelKind) -> (Vec<Vec<f64>>, Vec<Vec<bool>>) {
    idx.iter()
        .map(|&i| {
            let s = &data[i];
            let mut x = Vec::new();
            let mut m = Vec::new();
            if kind != ModelKind::LrNotes {
                x.extend_from_slice(&s.baseline.values);
                m.extend_from_slice(&s.baseline.missing);
            }
            if kind != ModelKind::LrStructured {
                x.extend(s.bow.iter().map(|c| c.ln_1p()));
                m.extend(std::iter::repeat_n(false, s.bow.len()));
            }
            (x, m)
        })
        .unzip()
}

fn train_and_score<M: Classifier<Input = StayInput>>(
    mut model: M,
    train: &[StayInput],
    ys: &[f64],
    test: &[StayInput],
    hyper: &HyperConfig,
) -> Result<Vec<f64>> {
    train_classifier(&mut model, train, ys, &hyper.train_options())?;
    predict_proba(&model, test)
}

/// Fits `kind` on the `train` rows and returns positive-class probabilities
/// for the `test` rows. Every fitted statistic comes from `train` only and
/// is tagged with `split_id`.
#[allow(clippy::too_many_arguments)]
pub fn fit_predict(
    kind: ModelKind,
    data: &[EvalStay],
    train: &[usize],
    test: &[usize],
    hyper: &HyperConfig,
    lr_cfg: &LrTrainConfig,
    params: TuneParams,
    vocab_size: usize,
    split_id: &str,
) -> Result<Vec<f64>> {
    let ys: Vec<f64> = train.iter().map(|&i| data[i].label as u8 as f64).collect();
    match kind {
        ModelKind::LrStructured | ModelKind::LrNotes | ModelKind::LrBoth => {
            let (xs, miss) = lr_rows(data, train, kind);
            let std = Standardizer::fit(&xs, Some(&miss))?;
            let xs: Vec<Vec<f64>> = xs
                .iter()
                .zip(&miss)
                .map(|(x, m)| std.apply(x, Some(m)))
                .collect();
            let cfg = LrTrainConfig {
                lr: lr_cfg.lr * params.lr_mult,
                ..*lr_cfg
            };
            let model = lr_train(&xs, &ys, &cfg)?;
            let (tx, tm) = lr_rows(data, test, kind);
            Ok(tx
                .iter()
                .zip(&tm)
                .map(|(x, m)| model.predict(&std.apply(x, Some(m))))
                .collect())
        }
        _ => {
            let first = train
                .first()
                .ok_or_else(|| Error::Training("empty training split".into()))?;
            let tensors: Vec<StayTensor> = train.iter().map(|&i| data[i].tensor.clone()).collect();
            let stats = ScalingStats::fit(&tensors, split_id)?;
            let train_in = neural_inputs(data, train, &stats, split_id)?;
            let test_in = neural_inputs(data, test, &stats, split_id)?;
            let h = HyperConfig {
                lr: hyper.lr * params.lr_mult,
                hops: params.hops,
                memory_size: data[*first].tensor.t,
                seed: derive_seed(hyper.seed, &format!("{split_id}/{kind}")),
                ..hyper.clone()
            };
            match kind {
                ModelKind::MnHielstm => train_and_score(
                    MemoryNetwork::new(h.clone(), vocab_size, D)?,
                    &train_in,
                    &ys,
                    &test_in,
                    &h,
                ),
                ModelKind::Lstm => {
                    train_and_score(LstmBaseline::new(&h, D)?, &train_in, &ys, &test_in, &h)
                }
                _ => train_and_score(
                    HieLstmOnly::new(&h, vocab_size)?,
                    &train_in,
                    &ys,
                    &test_in,
                    &h,
                ),
            }
        }
    }
}

fn labels_of(data: &[EvalStay], idx: &[usize]) -> Vec<bool> {
    idx.iter().map(|&i| data[i].label).collect()
}

fn split_by_fold(idx: &[usize], folds: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (pos, &i) in idx.iter().enumerate() {
        if folds[pos] == f {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    (train, test)
}

struct Ctx<'a> {
    data: &'a [EvalStay],
    kinds: &'a [ModelKind],
    hyper: &'a HyperConfig,
    lr_cfg: &'a LrTrainConfig,
    cv: &'a CvConfig,
    vocab_size: usize,
    all: Vec<usize>,
    outer: Vec<usize>,
}

impl Ctx<'_> {
    fn outer_fold(&self, f: usize) -> Result<Vec<MetricRecord>> {
        let (train, test) = split_by_fold(&self.all, &self.outer, f);
        let groups: Vec<String> = train
            .iter()
            .map(|&i| self.data[i].patient_id.clone())
            .collect();
        let inner = stratified_group_folds(
            &labels_of(self.data, &train),
            &groups,
            self.cv.inner_folds,
            derive_seed(self.cv.seed, &format!("inner/{f}")),
        )?;
        let test_labels = labels_of(self.data, &test);
        let mut out = Vec::with_capacity(self.kinds.len());
        for &kind in self.kinds {
            let grid = self.cv.grid(kind, self.hyper.hops);
            let chosen = if grid.len() == 1 {
                grid[0]
            } else {
                let mut best: Option<(f64, TuneParams)> = None;
                for &p in &grid {
                    let mut scores = Vec::with_capacity(self.cv.inner_folds);
                    for g in 0..self.cv.inner_folds {
                        let (itrain, itest) = split_by_fold(&train, &inner, g);
                        let split = format!("outer{f}/inner{g}");
                        let probs = fit_predict(
                            kind,
                            self.data,
                            &itrain,
                            &itest,
                            self.hyper,
                            self.lr_cfg,
                            p,
                            self.vocab_size,
                            &split,
                        )?;
                        scores.push(auc(&probs, &labels_of(self.data, &itest))?);
                    }
                    let m = mean(&scores);
                    if best.is_none_or(|(b, _)| m > b) {
                        best = Some((m, p));
                    }
                }
                best.expect("grid is non-empty").1
            };
            let probs = fit_predict(
                kind,
                self.data,
                &train,
                &test,
                self.hyper,
                self.lr_cfg,
                chosen,
                self.vocab_size,
                &format!("outer{f}"),
            )?;
            let pr = precision_recall(&probs, &test_labels, self.cv.cutoff)?;
            out.push(MetricRecord {
                model: kind,
                fold: f,
                auc: auc(&probs, &test_labels)?,
                precision: pr.precision,
                recall: pr.recall,
                precision_defined: pr.precision_defined,
                chosen,
            });
        }
        Ok(out)
    }
}

/// Outer folds estimate performance; inner folds on each outer training
/// split pick the learning-rate multiplier (and hop count for the memory
/// network) by mean AUC.
pub fn nested_cv(
    data: &[EvalStay],
    kinds: &[ModelKind],
    hyper: &HyperConfig,
    lr_cfg: &LrTrainConfig,
    cv: &CvConfig,
    vocab_size: usize,
) -> Result<CvReport> {
    cv.validate()?;
    hyper.validate()?;
    if kinds.is_empty() {
        return Err(Error::Argument("no models to evaluate".into()));
    }
    let labels: Vec<bool> = data.iter().map(|s| s.label).collect();
    let groups: Vec<String> = data.iter().map(|s| s.patient_id.clone()).collect();
    let outer = stratified_group_folds(
        &labels,
        &groups,
        cv.outer_folds,
        derive_seed(cv.seed, "outer"),
    )?;
    let ctx = Ctx {
        data,
        kinds,
        hyper,
        lr_cfg,
        cv,
        vocab_size,
        all: (0..data.len()).collect(),
        outer,
    };

    let slots: Mutex<Vec<Option<Result<Vec<MetricRecord>>>>> =
        Mutex::new((0..cv.outer_folds).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let f = next.fetch_add(1, Ordering::SeqCst);
        if f >= cv.outer_folds {
            break;
        }
        let r = ctx.outer_fold(f);
        slots.lock().expect("no worker panicked")[f] = Some(r);
    };
    let jobs = cv.jobs.clamp(1, cv.outer_folds);
    if jobs == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..jobs {
                s.spawn(worker);
            }
        });
    }

    let mut records = Vec::new();
    for slot in slots.into_inner().expect("no worker panicked") {
        records.extend(slot.expect("every fold ran")?);
    }
    records.sort_by_key(|r| (kinds.iter().position(|k| *k == r.model), r.fold));
    let summary = kinds
        .iter()
        .map(|&k| {
            let rs: Vec<&MetricRecord> = records.iter().filter(|r| r.model == k).collect();
            let stat = |f: fn(&MetricRecord) -> f64| {
                let xs: Vec<f64> = rs.iter().map(|r| f(r)).collect();
                (mean(&xs), sample_sd(&xs))
            };
            SummaryRow {
                model: k,
                auc: stat(|r| r.auc),
                precision: stat(|r| r.precision),
                recall: stat(|r| r.recall),
            }
        })
        .collect();
    Ok(CvReport { records, summary })
}
