use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::check_matrix;
use crate::numeric::{Adam, AdamConfig, ParamId, ParamStore, Tape, Tensor, Var};
use crate::util::{derive_seed, rng_for};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AeConfig {
    pub bottleneck: usize,
    pub activation: Activation,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for AeConfig {
    fn default() -> Self {
        Self {
            bottleneck: 2,
            activation: Activation::Tanh,
            epochs: 200,
            batch_size: 64,
            lr: 0.01,
            init_scale: 0.1,
            seed: 0,
        }
    }
}

/// `h = act(W1 x + b1)`, `x' = W2 h + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub config: AeConfig,
    pub store: ParamStore,
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

impl Autoencoder {
    pub fn new(config: AeConfig, input_dim: usize) -> Result<Self> {
        if config.bottleneck == 0 || input_dim == 0 || config.batch_size == 0 {
            return Err(Error::Config("autoencoder sizes must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "ae.init"));
        let mut store = ParamStore::new();
        let s = config.init_scale;
        let h = config.bottleneck;
        let w1 = store.add_uniform("ae.w1", &[h, input_dim], s, &mut rng);
        let b1 = store.add("ae.b1", Tensor::zeros(&[h]));
        let w2 = store.add_uniform("ae.w2", &[input_dim, h], s, &mut rng);
        let b2 = store.add("ae.b2", Tensor::zeros(&[input_dim]));
        Ok(Self {
            config,
            store,
            w1,
            b1,
            w2,
            b2,
        })
    }

    /// Bottleneck activations for the rows of `x`.
    pub fn encode(&self, tape: &mut Tape<'_>, x: Var) -> Result<Var> {
        let w1 = tape.param(self.w1);
        let b1 = tape.param(self.b1);
        let w1t = tape.transpose(w1)?;
        let pre = tape.matmul(x, w1t)?;
        let pre = tape.add_row_bias(pre, b1)?;
        Ok(match self.config.activation {
            Activation::Tanh => tape.tanh(pre),
            Activation::Linear => pre,
        })
    }

    pub fn decode(&self, tape: &mut Tape<'_>, h: Var) -> Result<Var> {
        let w2 = tape.param(self.w2);
        let b2 = tape.param(self.b2);
        let w2t = tape.transpose(w2)?;
        let out = tape.matmul(h, w2t)?;
        tape.add_row_bias(out, b2)
    }

    /// Mean over rows of the squared reconstruction error.
    pub fn loss(&self, tape: &mut Tape<'_>, rows: &[Vec<f64>]) -> Result<Var> {
        let x = tape.input(Tensor::from_rows(rows)?);
        let h = self.encode(tape, x)?;
        let r = self.decode(tape, h)?;
        let diff = tape.sub(r, x)?;
        let sq = tape.square(diff);
        let total = tape.sum(sq);
        Ok(tape.scale(total, 1.0 / rows.len() as f64))
    }

    /// Mini-batch Adam; returns the full-data loss after each epoch.
    pub fn train(&mut self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        let mut adam = Adam::new(
            AdamConfig {
                lr: self.config.lr,
                ..AdamConfig::default()
            },
            &self.store,
        );
        let mut rng = rng_for(self.config.seed, "ae.shuffle");
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut history = Vec::with_capacity(self.config.epochs);
        for _ in 0..self.config.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(self.config.batch_size) {
                let rows: Vec<Vec<f64>> = batch.iter().map(|&i| x[i].clone()).collect();
                let grads = {
                    let mut tape = Tape::new(&self.store);
                    let l = self.loss(&mut tape, &rows)?;
                    tape.backward(l)?
                };
                adam.step(&mut self.store, &grads)?;
            }
            history.push(self.reconstruction_error(x)?);
        }
        Ok(history)
    }

    pub fn reconstruction_error(&self, x: &[Vec<f64>]) -> Result<f64> {
        let mut tape = Tape::new(&self.store);
        let l = self.loss(&mut tape, x)?;
        tape.value(l).item()
    }

    pub fn embed(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let mut tape = Tape::new(&self.store);
        let xv = tape.input(Tensor::from_rows(x)?);
        let h = self.encode(&mut tape, xv)?;
        let t = tape.value(h);
        Ok((0..t.rows()).map(|i| t.row(i).to_vec()).collect())
    }
}

/// Trains an autoencoder on `x` and returns it with the bottleneck codes.
pub fn autoencoder_embed(
    x: &[Vec<f64>],
    config: &AeConfig,
) -> Result<(Autoencoder, Vec<Vec<f64>>)> {
    let d = check_matrix(x, "autoencoder")?;
    if x.len() < 2 || d < 2 {
        return Err(Error::Argument(format!(
            "autoencoder needs at least 2x2 data, got {}x{d}",
            x.len()
        )));
    }
    let mut ae = Autoencoder::new(config.clone(), d)?;
    ae.train(x)?;
    let codes = ae.embed(x)?;
    Ok((ae, codes))
}
