//! Memory network over binned structured data, queried by a hierarchical
//! LSTM note encoder, with static features fused into the stay vector.

mod checkpoint;
mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cohort::NULL_NOTE;
use crate::features::{StayTensor, STATIC_DIM};
use crate::numeric::{LstmParams, ParamId, ParamStore, Tape, Tensor, Var};
use crate::util::derive_seed;
use crate::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use train::{batch_loss, predict_proba, train_classifier, Classifier, TrainOptions};

/// Everything a model may see about one stay.
#[derive(Debug, Clone, PartialEq)]
pub struct StayInput {
    /// Scaled `t x d` structured matrix.
    pub tensor: StayTensor,
    pub statics: [f64; STATIC_DIM],
    /// Token-index sequences in timestamp order; may be empty.
    pub notes: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperConfig {
    pub memory_size: usize,
    pub emb_dim: usize,
    pub word_dim: usize,
    pub bottom_hidden: usize,
    pub top_hidden: usize,
    pub static_proj: usize,
    pub hops: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub max_note_len: usize,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for HyperConfig {
    fn default() -> Self {
        Self {
            memory_size: 12,
            emb_dim: 128,
            word_dim: 50,
            bottom_hidden: 200,
            top_hidden: 128,
            static_proj: 16,
            hops: 1,
            batch_size: 32,
            lr: 0.01,
            epochs: 10,
            max_note_len: 30,
            init_scale: 0.1,
            seed: 0,
        }
    }
}

impl HyperConfig {
    /// Reduced widths for single-core runs; training settings unchanged.
    pub fn desk() -> Self {
        Self {
            emb_dim: 16,
            word_dim: 12,
            bottom_hidden: 16,
            top_hidden: 16,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("memory_size", self.memory_size),
            ("emb_dim", self.emb_dim),
            ("word_dim", self.word_dim),
            ("bottom_hidden", self.bottom_hidden),
            ("top_hidden", self.top_hidden),
            ("static_proj", self.static_proj),
            ("hops", self.hops),
            ("batch_size", self.batch_size),
            ("max_note_len", self.max_note_len),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.top_hidden != self.emb_dim {
            return Err(Error::Config(format!(
                "top_hidden ({}) must equal emb_dim ({}) so the query matches memory slots",
                self.top_hidden, self.emb_dim
            )));
        }
        if !(self.lr > 0.0) || !(self.init_scale >= 0.0) {
            return Err(Error::Config(
                "lr must be positive and init_scale non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn repr_dim(&self) -> usize {
        self.emb_dim + self.static_proj
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            seed: self.seed,
        }
    }
}

/// Word embeddings plus the word-level and note-level LSTMs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HieLstm {
    pub words: ParamId,
    pub bottom: LstmParams,
    pub top: LstmParams,
}

impl HieLstm {
    pub fn init(
        store: &mut ParamStore,
        vocab_size: usize,
        word_dim: usize,
        bottom_hidden: usize,
        top_hidden: usize,
        scale: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let words = store.add_uniform("hie.words", &[vocab_size, word_dim], scale, rng);
        let bottom = LstmParams::init(store, "hie.bottom", word_dim, bottom_hidden, scale, rng);
        let top = LstmParams::init(store, "hie.top", bottom_hidden, top_hidden, scale, rng);
        Self { words, bottom, top }
    }

    /// Last hidden state of the note-level LSTM run over the last hidden state
    /// of each note. A stay without notes reads the single null-note token.
    pub fn encode(&self, tape: &mut Tape<'_>, notes: &[Vec<usize>]) -> Result<Var> {
        let null = [vec![null_note_index()]];
        let notes = if notes.is_empty() { &null[..] } else { notes };
        let table = tape.param(self.words);
        let mut per_note = Vec::with_capacity(notes.len());
        for note in notes {
            let xs = note
                .iter()
                .map(|&w| tape.gather_row(table, w))
                .collect::<Result<Vec<_>>>()?;
            per_note.push(self.bottom.last_hidden(tape, &xs)?);
        }
        self.top.last_hidden(tape, &per_note)
    }
}

fn null_note_index() -> usize {
    // fixed by the vocabulary layout
    debug_assert_eq!(NULL_NOTE, "<none>");
    1
}

/// Memory-network weights; `a` and `b` are shared by every hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryParams {
    pub a: ParamId,
    pub b: ParamId,
    pub h: ParamId,
}

/// Tape handles of one memory read.
#[derive(Debug, Clone, Copy)]
pub struct MemoryState {
    pub z: Var,
    pub e: Var,
    pub alpha: Var,
    pub o: Var,
}

/// `z_j = A s_j`, `e_j = B s_j`, `alpha = softmax(Z u)`, `o = sum_j alpha_j e_j`.
pub fn memory_read(
    tape: &mut Tape<'_>,
    u: Var,
    s: Var,
    p: &MemoryParams,
    memory_size: usize,
) -> Result<MemoryState> {
    let rows = tape.value(s).rows();
    if tape.value(s).rank() != 2 || rows != memory_size {
        return Err(Error::Dimension(format!(
            "memory holds {memory_size} slots but the stay tensor has shape {:?}",
            tape.value(s).shape()
        )));
    }
    let a = tape.param(p.a);
    let b = tape.param(p.b);
    let at = tape.transpose(a)?;
    let bt = tape.transpose(b)?;
    let z = tape.matmul(s, at)?;
    let e = tape.matmul(s, bt)?;
    let scores = tape.matvec(z, u)?;
    let alpha = tape.softmax(scores)?;
    let o = tape.vecmat(alpha, e)?;
    Ok(MemoryState { z, e, alpha, o })
}

/// `u <- H u + o` for `hops` rounds; returns the final query and last read.
pub fn multi_hop(
    tape: &mut Tape<'_>,
    u: Var,
    s: Var,
    p: &MemoryParams,
    memory_size: usize,
    hops: usize,
) -> Result<(Var, MemoryState)> {
    if hops == 0 {
        return Err(Error::Argument("at least one hop is required".into()));
    }
    let h = tape.param(p.h);
    let mut u = u;
    let mut last = None;
    for _ in 0..hops {
        let state = memory_read(tape, u, s, p, memory_size)?;
        let hu = tape.matvec(h, u)?;
        u = tape.add(hu, state.o)?;
        last = Some(state);
    }
    Ok((u, last.expect("hops >= 1")))
}

/// `v = concat(u_L + o, W_s static)`.
pub fn fuse(tape: &mut Tape<'_>, u_l: Var, o: Var, statics: Var, w_s: ParamId) -> Result<Var> {
    let uo = tape.add(u_l, o)?;
    let w = tape.param(w_s);
    let proj = tape.matvec(w, statics)?;
    tape.concat(&[uo, proj])
}

/// Two-class softmax of `W v`.
pub fn predict(tape: &mut Tape<'_>, v: Var, w_out: ParamId) -> Result<Var> {
    let w = tape.param(w_out);
    let logits = tape.matvec(w, v)?;
    tape.softmax(logits)
}

/// The full stay encoder and classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryNetwork {
    pub config: HyperConfig,
    pub store: ParamStore,
    pub hie: HieLstm,
    pub memory: MemoryParams,
    pub w_static: ParamId,
    pub w_out: ParamId,
    pub d: usize,
}

impl MemoryNetwork {
    pub fn new(config: HyperConfig, vocab_size: usize, d: usize) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "mn.init"));
        let s = config.init_scale;
        let mut store = ParamStore::new();
        let hie = HieLstm::init(
            &mut store,
            vocab_size,
            config.word_dim,
            config.bottom_hidden,
            config.top_hidden,
            s,
            &mut rng,
        );
        let e = config.emb_dim;
        let memory = MemoryParams {
            a: store.add_uniform("mn.a", &[e, d], s, &mut rng),
            b: store.add_uniform("mn.b", &[e, d], s, &mut rng),
            h: store.add_uniform("mn.h", &[e, e], s, &mut rng),
        };
        let w_static = store.add_uniform(
            "mn.w_static",
            &[config.static_proj, STATIC_DIM],
            s,
            &mut rng,
        );
        let w_out = store.add_uniform("mn.w_out", &[2, config.repr_dim()], s, &mut rng);
        Ok(Self {
            config,
            store,
            hie,
            memory,
            w_static,
            w_out,
            d,
        })
    }

    /// Records the forward pass up to the fused representation `v`.
    pub fn represent(&self, tape: &mut Tape<'_>, x: &StayInput) -> Result<Var> {
        let u = self.hie.encode(tape, &x.notes)?;
        let s = tape.input(Tensor::matrix(
            x.tensor.t,
            x.tensor.d,
            x.tensor.values.clone(),
        )?);
        let (u_l, state) = multi_hop(
            tape,
            u,
            s,
            &self.memory,
            self.config.memory_size,
            self.config.hops,
        )?;
        let st = tape.input(Tensor::vector(x.statics.to_vec()));
        fuse(tape, u_l, state.o, st, self.w_static)
    }

    /// Representation vectors, one per input, in order.
    pub fn embed_stays(&self, xs: &[StayInput]) -> Result<Vec<Vec<f64>>> {
        xs.iter()
            .map(|x| {
                let mut tape = Tape::new(&self.store);
                let v = self.represent(&mut tape, x)?;
                Ok(tape.value(v).data().to_vec())
            })
            .collect()
    }
}

impl Classifier for MemoryNetwork {
    type Input = StayInput;

    fn params(&self) -> &ParamStore {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn forward(&self, tape: &mut Tape<'_>, x: &StayInput) -> Result<Var> {
        let v = self.represent(tape, x)?;
        predict(tape, v, self.w_out)
    }
}
