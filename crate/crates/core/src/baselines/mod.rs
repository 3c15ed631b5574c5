//! Comparison models: logistic regression on engineered features, an LSTM
//! over the structured rows, and the note encoder on its own.

mod logistic;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::STATIC_DIM;
use crate::model::{Classifier, HieLstm, HyperConfig, StayInput};
use crate::numeric::{LstmParams, ParamId, ParamStore, Tape, Tensor, Var};
use crate::util::derive_seed;
use crate::Result;

pub use logistic::{lr_gradient, lr_loss, lr_train, LrParams, LrTrainConfig, Standardizer};

/// Single LSTM over the `t x d` rows; last hidden state joined with the
/// static vector feeds a linear two-class head.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmBaseline {
    pub store: ParamStore,
    pub lstm: LstmParams,
    pub w: ParamId,
    pub b: ParamId,
}

impl LstmBaseline {
    pub fn new(config: &HyperConfig, d: usize) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "lstm.init"));
        let mut store = ParamStore::new();
        let s = config.init_scale;
        let h = config.emb_dim;
        let lstm = LstmParams::init(&mut store, "lstm", d, h, s, &mut rng);
        let w = store.add_uniform("lstm.w_out", &[2, h + STATIC_DIM], s, &mut rng);
        let b = store.add("lstm.b_out", Tensor::zeros(&[2]));
        Ok(Self { store, lstm, w, b })
    }
}

impl Classifier for LstmBaseline {
    type Input = StayInput;

    fn params(&self) -> &ParamStore {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn forward(&self, tape: &mut Tape<'_>, x: &StayInput) -> Result<Var> {
        let rows = (0..x.tensor.t)
            .map(|j| tape.input(Tensor::vector(x.tensor.row(j).to_vec())))
            .collect::<Vec<_>>();
        let h = self.lstm.last_hidden(tape, &rows)?;
        let st = tape.input(Tensor::vector(x.statics.to_vec()));
        let feat = tape.concat(&[h, st])?;
        head(tape, feat, self.w, self.b)
    }
}

/// Note encoder with a linear two-class head and no structured input.
#[derive(Debug, Clone, PartialEq)]
pub struct HieLstmOnly {
    pub store: ParamStore,
    pub hie: HieLstm,
    pub w: ParamId,
    pub b: ParamId,
}

impl HieLstmOnly {
    pub fn new(config: &HyperConfig, vocab_size: usize) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "hie.init"));
        let mut store = ParamStore::new();
        let s = config.init_scale;
        let hie = HieLstm::init(
            &mut store,
            vocab_size,
            config.word_dim,
            config.bottom_hidden,
            config.top_hidden,
            s,
            &mut rng,
        );
        let w = store.add_uniform("hie.w_out", &[2, config.top_hidden], s, &mut rng);
        let b = store.add("hie.b_out", Tensor::zeros(&[2]));
        Ok(Self { store, hie, w, b })
    }
}

impl Classifier for HieLstmOnly {
    type Input = StayInput;

    fn params(&self) -> &ParamStore {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn forward(&self, tape: &mut Tape<'_>, x: &StayInput) -> Result<Var> {
        let u = self.hie.encode(tape, &x.notes)?;
        head(tape, u, self.w, self.b)
    }
}

fn head(tape: &mut Tape<'_>, feat: Var, w: ParamId, b: ParamId) -> Result<Var> {
    let w = tape.param(w);
    let b = tape.param(b);
    let logits = tape.matvec(w, feat)?;
    let logits = tape.add(logits, b)?;
    tape.softmax(logits)
}
