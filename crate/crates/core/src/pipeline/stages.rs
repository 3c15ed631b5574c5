//! File-backed stages with manifests for resumable, idempotent runs.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cohort::{generate_cohort, read_cohort, write_cohort, Cohort, IcuStay};
use crate::eval::{nested_cv, prepare_stays, CvReport, EvalStay};
use crate::features::ScalingStats;
use crate::kdigo::{apply_exclusions, AkiLabel, Exclusion, LabeledStay, TriggerRule};
use crate::model::{load_checkpoint, save_checkpoint, HyperConfig};
use crate::stats::{build_subtype_report, heatmap_matrix, stage_composition, SubtypeReport};
use crate::util::sha256_hex;
use crate::{Error, Result};

use super::compute::{
    cluster_embeddings, embed_inputs, fit_full_scaling, restore_memory_network, scaled_inputs,
    train_memory_network,
};
use super::config::{EmbedMethod, RunConfig, SCHEMA_VERSION};

pub const COHORT: &str = "cohort.jsonl";
pub const LABELS: &str = "labels.csv";
pub const EXCLUSIONS: &str = "exclusions.csv";
pub const FEATURES: &str = "features.jsonl";
pub const CHECKPOINT: &str = "model.ckpt";
pub const SCALING: &str = "scaling.json";
pub const TRAIN_HISTORY: &str = "train_history.csv";
pub const EMBEDDINGS: &str = "embeddings.csv";
pub const TSNE: &str = "tsne.csv";
pub const K_SELECTION: &str = "k_selection.csv";
pub const CLUSTERS: &str = "clusters.csv";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TXT: &str = "report.txt";
pub const HEATMAP: &str = "heatmap.csv";
pub const STAGE_COMPOSITION: &str = "stage_composition.csv";
pub const METRICS_FOLDS: &str = "metrics_folds.csv";
pub const METRICS_TABLE: &str = "metrics_table.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Synth,
    Label,
    Featurize,
    Train,
    Embed,
    Cluster,
    Interpret,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Synth,
        Stage::Label,
        Stage::Featurize,
        Stage::Train,
        Stage::Embed,
        Stage::Cluster,
        Stage::Interpret,
        Stage::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Label => "label",
            Stage::Featurize => "featurize",
            Stage::Train => "train",
            Stage::Embed => "embed",
            Stage::Cluster => "cluster",
            Stage::Interpret => "interpret",
            Stage::Evaluate => "evaluate",
        }
    }

    /// Artifacts read by the stage, all produced by earlier stages.
    pub fn inputs(self) -> &'static [&'static str] {
        match self {
            Stage::Synth => &[],
            Stage::Label => &[COHORT],
            Stage::Featurize => &[COHORT, LABELS],
            Stage::Train => &[FEATURES],
            Stage::Embed => &[FEATURES, CHECKPOINT, SCALING],
            Stage::Cluster => &[EMBEDDINGS],
            Stage::Interpret => &[COHORT, LABELS, CLUSTERS],
            Stage::Evaluate => &[FEATURES],
        }
    }

    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            Stage::Synth => &[COHORT],
            Stage::Label => &[LABELS, EXCLUSIONS],
            Stage::Featurize => &[FEATURES],
            Stage::Train => &[CHECKPOINT, SCALING, TRAIN_HISTORY],
            Stage::Embed => &[EMBEDDINGS],
            Stage::Cluster => &[TSNE, K_SELECTION, CLUSTERS],
            Stage::Interpret => &[REPORT_CSV, REPORT_TXT, HEATMAP, STAGE_COMPOSITION],
            Stage::Evaluate => &[METRICS_FOLDS, METRICS_TABLE],
        }
    }

    pub fn manifest_name(self) -> String {
        format!("manifest_{}.json", self.name())
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: Stage,
    pub schema_version: u32,
    pub seed: u64,
    /// SHA-256 of the configuration the stage depends on.
    pub config_hash: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Ran,
    /// Manifest, inputs and outputs all matched; nothing was recomputed.
    UpToDate,
}

/// Header line of `features.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FeatureHeader {
    vocab_size: usize,
    t1_hours: f64,
    n_stays: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LabelRow {
    index: usize,
    stay_id: String,
    patient_id: String,
    is_case: bool,
    stage: Option<u8>,
    onset_offset_hours: Option<f64>,
    triggering_rule: Option<TriggerRule>,
}

pub struct Runner {
    cfg: RunConfig,
}

impl Runner {
    /// Resolves and validates `cfg`; artifacts go to `cfg.output_dir`.
    pub fn new(cfg: RunConfig) -> Result<Self> {
        Ok(Self {
            cfg: cfg.resolve()?,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn out_dir(&self) -> &Path {
        &self.cfg.output_dir
    }

    pub fn path(&self, artifact: &str) -> PathBuf {
        self.cfg.output_dir.join(artifact)
    }

    pub fn run_all(&self) -> Result<Vec<(Stage, StageStatus)>> {
        Stage::ALL
            .into_iter()
            .map(|s| Ok((s, self.run(s)?)))
            .collect()
    }

    pub fn run(&self, stage: Stage) -> Result<StageStatus> {
        let dir = &self.cfg.output_dir;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for name in stage.inputs() {
            let p = self.path(name);
            if !p.is_file() {
                return Err(Error::Dependency {
                    stage: stage.name().into(),
                    missing: p,
                });
            }
        }
        let config_hash = self.config_hash(stage)?;
        let mut inputs = self.hash_files(stage.inputs())?;
        if let (Stage::Synth, Some(p)) = (stage, &self.cfg.cohort_path) {
            inputs.insert(p.display().to_string(), hash_file(p)?);
        }
        if self.up_to_date(stage, &config_hash, &inputs)? {
            return Ok(StageStatus::UpToDate);
        }
        match stage {
            Stage::Synth => self.synth()?,
            Stage::Label => self.label()?,
            Stage::Featurize => self.featurize()?,
            Stage::Train => self.train()?,
            Stage::Embed => self.embed()?,
            Stage::Cluster => self.cluster()?,
            Stage::Interpret => self.interpret()?,
            Stage::Evaluate => self.evaluate()?,
        }
        let manifest = Manifest {
            stage,
            schema_version: SCHEMA_VERSION,
            seed: self.cfg.seed,
            config_hash,
            inputs,
            outputs: self.hash_files(stage.outputs())?,
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Config(format!("manifest: {e}")))?;
        write_text(&self.path(&stage.manifest_name()), &(text + "\n"))?;
        Ok(StageStatus::Ran)
    }

    fn hash_files(&self, names: &[&str]) -> Result<BTreeMap<String, String>> {
        names
            .iter()
            .map(|n| Ok((n.to_string(), hash_file(&self.path(n))?)))
            .collect()
    }

    fn up_to_date(
        &self,
        stage: Stage,
        config_hash: &str,
        inputs: &BTreeMap<String, String>,
    ) -> Result<bool> {
        let path = self.path(&stage.manifest_name());
        let Ok(text) = std::fs::read_to_string(&path) else {
            return Ok(false);
        };
        let Ok(m) = serde_json::from_str::<Manifest>(&text) else {
            return Ok(false);
        };
        if m.schema_version != SCHEMA_VERSION
            || m.seed != self.cfg.seed
            || m.config_hash != config_hash
            || &m.inputs != inputs
        {
            return Ok(false);
        }
        for name in stage.outputs() {
            let p = self.path(name);
            if !p.is_file() || m.outputs.get(*name) != Some(&hash_file(&p)?) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Hash of the configuration sections a stage reads.
    fn config_hash(&self, stage: Stage) -> Result<String> {
        let c = &self.cfg;
        let value = match stage {
            Stage::Synth => serde_json::json!({"cohort": c.cohort, "cohort_path": c.cohort_path}),
            Stage::Label => serde_json::json!({"t1": c.t1_hours, "t2": c.t2_days}),
            Stage::Featurize => {
                serde_json::json!({"t1": c.t1_hours, "max_note_len": c.model.max_note_len})
            }
            Stage::Train => serde_json::json!({"model": c.model}),
            Stage::Embed => serde_json::json!({"embed": c.embed}),
            Stage::Cluster => serde_json::json!({"cluster": c.cluster}),
            Stage::Interpret => serde_json::json!({}),
            Stage::Evaluate => serde_json::json!({"model": c.model, "evaluate": c.evaluate}),
        };
        Ok(sha256_hex(value.to_string().as_bytes()))
    }

    fn synth(&self) -> Result<()> {
        let (stays, vocab) = match &self.cfg.cohort_path {
            Some(p) => {
                let c = read_cohort(p)?;
                (c.stays, c.vocab)
            }
            None => generate_cohort(&self.cfg.cohort)?,
        };
        write_cohort(&stays, &vocab, &self.path(COHORT))
    }

    fn label(&self) -> Result<()> {
        let cohort = read_cohort(&self.path(COHORT))?;
        let (labeled, excluded) =
            apply_exclusions(&cohort.stays, self.cfg.t1_hours, self.cfg.t2_days)?;
        let mut w = csv_writer(&self.path(LABELS))?;
        for l in &labeled {
            let s = &cohort.stays[l.index];
            w.serialize(LabelRow {
                index: l.index,
                stay_id: s.stay_id.clone(),
                patient_id: s.patient_id.clone(),
                is_case: l.label.is_case,
                stage: l.label.stage,
                onset_offset_hours: l.label.onset_offset_hours,
                triggering_rule: l.label.triggering_rule,
            })
            .map_err(|e| csv_err(&self.path(LABELS), e))?;
        }
        finish_csv(w, &self.path(LABELS))?;
        let mut w = csv_writer(&self.path(EXCLUSIONS))?;
        for x in &excluded {
            w.serialize(x).map_err(|e| csv_err(&self.path(EXCLUSIONS), e))?;
        }
        if excluded.is_empty() {
            w.write_record(["stay_id", "reason"])
                .map_err(|e| csv_err(&self.path(EXCLUSIONS), e))?;
        }
        finish_csv(w, &self.path(EXCLUSIONS))
    }

    fn featurize(&self) -> Result<()> {
        let cohort = read_cohort(&self.path(COHORT))?;
        let labeled = read_labels(&self.path(LABELS), &cohort)?;
        let data = prepare_stays(
            &cohort.stays,
            &labeled,
            &cohort.vocab,
            self.cfg.t1_hours,
            self.cfg.model.max_note_len,
        )?;
        let header = FeatureHeader {
            vocab_size: cohort.vocab.len(),
            t1_hours: self.cfg.t1_hours,
            n_stays: data.len(),
        };
        write_jsonl(&self.path(FEATURES), &header, &data)
    }

    fn train(&self) -> Result<()> {
        let (header, data) = read_features(&self.path(FEATURES))?;
        let stats = fit_full_scaling(&data)?;
        let (net, history) = train_memory_network(&data, &stats, &self.cfg.model, header.vocab_size)?;
        let meta = serde_json::to_string(&net.config)
            .map_err(|e| Error::Config(format!("checkpoint meta: {e}")))?;
        save_checkpoint(&net.store, &meta, &self.path(CHECKPOINT))?;
        let text = serde_json::to_string_pretty(&stats)
            .map_err(|e| Error::Config(format!("scaling: {e}")))?;
        write_text(&self.path(SCALING), &(text + "\n"))?;
        let mut w = csv_writer(&self.path(TRAIN_HISTORY))?;
        w.write_record(["epoch", "loss"])
            .map_err(|e| csv_err(&self.path(TRAIN_HISTORY), e))?;
        for (i, l) in history.iter().enumerate() {
            w.write_record([(i + 1).to_string(), l.to_string()])
                .map_err(|e| csv_err(&self.path(TRAIN_HISTORY), e))?;
        }
        finish_csv(w, &self.path(TRAIN_HISTORY))
    }

    fn embed(&self) -> Result<()> {
        let (header, data) = read_features(&self.path(FEATURES))?;
        let stats: ScalingStats = read_json(&self.path(SCALING))?;
        let cases: Vec<EvalStay> = data.into_iter().filter(|s| s.label).collect();
        if cases.is_empty() {
            return Err(Error::InsufficientData("no AKI cases to embed".into()));
        }
        let inputs = scaled_inputs(&cases, &stats)?;
        let net = match self.cfg.embed.method {
            EmbedMethod::MemoryNetwork => {
                let (store, meta) = load_checkpoint(&self.path(CHECKPOINT))?;
                let config: HyperConfig = serde_json::from_str(&meta).map_err(|e| {
                    Error::Schema(format!("checkpoint metadata is not a model config: {e}"))
                })?;
                Some(restore_memory_network(config, header.vocab_size, store)?)
            }
            _ => None,
        };
        let emb = embed_inputs(&inputs, &self.cfg.embed, net.as_ref())?;
        let dim = emb.first().map_or(0, Vec::len);
        let path = self.path(EMBEDDINGS);
        let mut w = csv_writer(&path)?;
        let mut head = vec!["stay_id".to_string()];
        head.extend((0..dim).map(|j| format!("e{j}")));
        w.write_record(&head).map_err(|e| csv_err(&path, e))?;
        for (s, row) in cases.iter().zip(&emb) {
            let mut rec = vec![s.stay_id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| csv_err(&path, e))?;
        }
        finish_csv(w, &path)
    }

    fn cluster(&self) -> Result<()> {
        let (ids, emb) = read_matrix(&self.path(EMBEDDINGS))?;
        let out = cluster_embeddings(&emb, &self.cfg.cluster, self.cfg.seed)?;

        let path = self.path(TSNE);
        let mut w = csv_writer(&path)?;
        w.write_record(["stay_id", "x", "y"]).map_err(|e| csv_err(&path, e))?;
        for (id, p) in ids.iter().zip(&out.tsne.embedding) {
            w.write_record([id.clone(), p[0].to_string(), p[1].to_string()])
                .map_err(|e| csv_err(&path, e))?;
        }
        finish_csv(w, &path)?;

        let path = self.path(K_SELECTION);
        let mut w = csv_writer(&path)?;
        w.write_record(["k", "mcclain_rao", "inertia", "selected"])
            .map_err(|e| csv_err(&path, e))?;
        for &(k, mr, inertia) in &out.selection.table {
            w.write_record([
                k.to_string(),
                mr.to_string(),
                inertia.to_string(),
                (k == out.selection.best_k).to_string(),
            ])
            .map_err(|e| csv_err(&path, e))?;
        }
        finish_csv(w, &path)?;

        let path = self.path(CLUSTERS);
        let mut w = csv_writer(&path)?;
        w.write_record(["stay_id", "cluster"]).map_err(|e| csv_err(&path, e))?;
        for (id, c) in ids.iter().zip(&out.selection.assignment.labels) {
            w.write_record([id.clone(), c.to_string()])
                .map_err(|e| csv_err(&path, e))?;
        }
        finish_csv(w, &path)
    }

    fn interpret(&self) -> Result<()> {
        let cohort = read_cohort(&self.path(COHORT))?;
        let labeled = read_labels(&self.path(LABELS), &cohort)?;
        let clusters = read_clusters(&self.path(CLUSTERS))?;
        let by_id: HashMap<&str, &LabeledStay> = labeled
            .iter()
            .map(|l| (cohort.stays[l.index].stay_id.as_str(), l))
            .collect();
        let mut stays: Vec<IcuStay> = Vec::with_capacity(clusters.len());
        let mut labels: Vec<AkiLabel> = Vec::with_capacity(clusters.len());
        let mut ids: Vec<usize> = Vec::with_capacity(clusters.len());
        for (id, c) in &clusters {
            let l = by_id.get(id.as_str()).ok_or_else(|| {
                Error::Data(format!("clustered stay {id} has no label"))
            })?;
            stays.push(cohort.stays[l.index].clone());
            labels.push(l.label);
            ids.push(*c);
        }
        let report = build_subtype_report(&stays, &labels, &ids)?;
        write_report_csv(&self.path(REPORT_CSV), &report)?;
        write_text(&self.path(REPORT_TXT), &report.to_text())?;

        let heat = heatmap_matrix(&report);
        let path = self.path(HEATMAP);
        let mut w = csv_writer(&path)?;
        let mut head = vec!["variable".to_string()];
        head.extend((0..report.k).map(cluster_label));
        w.write_record(&head).map_err(|e| csv_err(&path, e))?;
        for (name, row) in heat.variables.iter().zip(&heat.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| csv_err(&path, e))?;
        }
        finish_csv(w, &path)?;

        let stages: Vec<Option<u8>> = labels.iter().map(|l| l.stage).collect();
        let comp = stage_composition(&ids, &stages)?;
        let path = self.path(STAGE_COMPOSITION);
        let mut w = csv_writer(&path)?;
        w.write_record([
            "cluster", "n", "stage1", "stage2", "stage3", "pct_stage1", "pct_stage2",
            "pct_stage3", "modal_stage",
        ])
        .map_err(|e| csv_err(&path, e))?;
        for c in 0..comp.counts.len() {
            let n: usize = comp.counts[c].iter().sum();
            let mut rec = vec![cluster_label(c), n.to_string()];
            rec.extend(comp.counts[c].iter().map(|v| v.to_string()));
            rec.extend(comp.percentages[c].iter().map(|v| format!("{v:.2}")));
            rec.push(comp.modal_stage(c).to_string());
            w.write_record(&rec).map_err(|e| csv_err(&path, e))?;
        }
        finish_csv(w, &path)
    }

    fn evaluate(&self) -> Result<()> {
        let (header, data) = read_features(&self.path(FEATURES))?;
        let e = &self.cfg.evaluate;
        let report = nested_cv(
            &data,
            &e.models,
            &self.cfg.model,
            &e.logistic,
            &e.cv,
            header.vocab_size,
        )?;
        write_metrics(&self.path(METRICS_FOLDS), &self.path(METRICS_TABLE), &report)
    }
}

fn cluster_label(c: usize) -> String {
    format!("cluster_{}", c + 1)
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn finish_csv(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            line,
            message: format!("{}: {other:?}", path.display()),
        },
    }
}

fn write_jsonl<H: Serialize, T: Serialize>(path: &Path, header: &H, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut line = |v: String| {
        w.write_all(v.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))
    };
    let enc = |e: serde_json::Error| Error::Data(format!("{}: {e}", path.display()));
    line(serde_json::to_string(header).map_err(enc)?)?;
    for r in rows {
        line(serde_json::to_string(r).map_err(enc)?)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_features(path: &Path) -> Result<(FeatureHeader, Vec<EvalStay>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let parse = |i: usize, text: &str, what: &str| Error::Parse {
        line: i + 1,
        message: format!("{}: bad {what}: {text}", path.display()),
    };
    let first = lines
        .next()
        .ok_or_else(|| parse(0, "empty file", "header"))?
        .map_err(|e| Error::io(path, e))?;
    let header: FeatureHeader =
        serde_json::from_str(&first).map_err(|e| parse(0, &e.to_string(), "header"))?;
    let mut data = Vec::with_capacity(header.n_stays);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let s: EvalStay =
            serde_json::from_str(&line).map_err(|e| parse(i + 1, &e.to_string(), "stay"))?;
        data.push(s);
    }
    if data.len() != header.n_stays {
        return Err(Error::Data(format!(
            "{}: header promises {} stays, found {}",
            path.display(),
            header.n_stays,
            data.len()
        )));
    }
    Ok((header, data))
}

fn read_labels(path: &Path, cohort: &Cohort) -> Result<Vec<LabeledStay>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for row in r.deserialize::<LabelRow>() {
        let row = row.map_err(|e| csv_err(path, e))?;
        match cohort.stays.get(row.index) {
            Some(s) if s.stay_id == row.stay_id => {}
            _ => {
                return Err(Error::Data(format!(
                    "label row for {} does not match the cohort",
                    row.stay_id
                )))
            }
        }
        out.push(LabeledStay {
            index: row.index,
            label: AkiLabel {
                is_case: row.is_case,
                onset_offset_hours: row.onset_offset_hours,
                stage: row.stage,
                triggering_rule: row.triggering_rule,
            },
        });
    }
    Ok(out)
}

/// Reads a `stay_id, v0, v1, ...` table.
fn read_matrix(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let mut it = rec.iter();
        ids.push(it.next().unwrap_or_default().to_string());
        let row = it
            .map(|v| {
                v.parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 2,
                    message: format!("{}: {e}", path.display()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((ids, rows))
}

fn read_clusters(path: &Path) -> Result<Vec<(String, usize)>> {
    #[derive(Deserialize)]
    struct Row {
        stay_id: String,
        cluster: usize,
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize::<Row>()
        .map(|row| {
            let row = row.map_err(|e| csv_err(path, e))?;
            Ok((row.stay_id, row.cluster))
        })
        .collect()
}

fn fmt_p(p: Option<f64>) -> String {
    p.map_or(String::new(), |p| format!("{p:.6}"))
}

fn write_report_csv(path: &Path, report: &SubtypeReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut head = vec!["variable".to_string(), "kind".to_string()];
    head.extend((0..report.k).map(cluster_label));
    head.extend(
        ["test", "p_unadjusted", "p_adjusted", "significant_pairs"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&head).map_err(|e| csv_err(path, e))?;
    for r in &report.rows {
        let mut rec = vec![
            r.name.clone(),
            serde_json::to_value(r.kind)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
        ];
        rec.extend(r.cells.iter().cloned());
        rec.push(r.test.clone());
        rec.push(fmt_p(r.p_unadjusted));
        rec.push(fmt_p(r.p_adjusted));
        rec.push(
            r.significant_pairs
                .iter()
                .map(|(a, b)| format!("{}-{}", a + 1, b + 1))
                .collect::<Vec<_>>()
                .join(" "),
        );
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    finish_csv(w, path)
}

fn write_metrics(folds: &Path, table: &Path, report: &CvReport) -> Result<()> {
    let mut w = csv_writer(folds)?;
    w.write_record([
        "model", "fold", "auc", "precision", "recall", "precision_defined", "lr_mult", "hops",
    ])
    .map_err(|e| csv_err(folds, e))?;
    for r in &report.records {
        w.write_record([
            r.model.id().to_string(),
            r.fold.to_string(),
            r.auc.to_string(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.precision_defined.to_string(),
            r.chosen.lr_mult.to_string(),
            r.chosen.hops.to_string(),
        ])
        .map_err(|e| csv_err(folds, e))?;
    }
    finish_csv(w, folds)?;

    let mut w = csv_writer(table)?;
    w.write_record(["model", "auc", "precision", "recall"])
        .map_err(|e| csv_err(table, e))?;
    for row in &report.summary {
        w.write_record(row.cells()).map_err(|e| csv_err(table, e))?;
    }
    finish_csv(w, table)
}

/// Reads the rows of `exclusions.csv`.
pub fn read_exclusions(path: &Path) -> Result<Vec<Exclusion>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(path, e)))
        .collect()
}
