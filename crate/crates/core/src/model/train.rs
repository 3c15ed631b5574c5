use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::numeric::{Adam, AdamConfig, Gradients, ParamStore, Tape, Var};
use crate::util::rng_for;
use crate::{Error, Result};

/// A model whose forward pass yields a two-entry probability vector.
pub trait Classifier {
    type Input;

    fn params(&self) -> &ParamStore;
    fn params_mut(&mut self) -> &mut ParamStore;
    fn forward(&self, tape: &mut Tape<'_>, x: &Self::Input) -> Result<Var>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

fn sample_loss<M: Classifier>(model: &M, tape: &mut Tape<'_>, x: &M::Input, y: f64) -> Result<Var> {
    let p = model.forward(tape, x)?;
    let p1 = tape.slice(p, 1, 1)?;
    tape.cross_entropy(p1, &[y])
}

/// Summed cross-entropy of a batch recorded on one tape.
pub fn batch_loss<M: Classifier>(
    model: &M,
    tape: &mut Tape<'_>,
    xs: &[M::Input],
    ys: &[f64],
) -> Result<Var> {
    let mut total: Option<Var> = None;
    for (x, &y) in xs.iter().zip(ys) {
        let l = sample_loss(model, tape, x, y)?;
        total = Some(match total {
            Some(t) => tape.add(t, l)?,
            None => l,
        });
    }
    total.ok_or_else(|| Error::Argument("empty batch".into()))
}

/// Mini-batch Adam on the summed cross-entropy. Returns the mean per-sample
/// loss of each epoch. Sample gradients are accumulated in batch order, so
/// runs are bit-reproducible for a given seed.
pub fn train_classifier<M: Classifier>(
    model: &mut M,
    xs: &[M::Input],
    ys: &[f64],
    opts: &TrainOptions,
) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension(format!(
            "{} inputs but {} labels",
            xs.len(),
            ys.len()
        )));
    }
    if xs.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    let positives = ys.iter().filter(|&&y| y == 1.0).count();
    if positives == 0 || positives == ys.len() {
        return Err(Error::Training(
            "training labels contain a single class".into(),
        ));
    }
    let mut adam = Adam::new(
        AdamConfig {
            lr: opts.lr,
            ..AdamConfig::default()
        },
        model.params(),
    );
    let mut rng = rng_for(opts.seed, "train.shuffle");
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut history = Vec::with_capacity(opts.epochs);
    for _ in 0..opts.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(opts.batch_size.max(1)) {
            let mut grads = Gradients::zeros_like(model.params());
            for &i in batch {
                let tape_grads = {
                    let mut tape = Tape::new(model.params());
                    let loss = sample_loss(model, &mut tape, &xs[i], ys[i])?;
                    epoch_loss += tape.value(loss).item()?;
                    tape.backward(loss)?
                };
                grads.accumulate(&tape_grads);
            }
            adam.step(model.params_mut(), &grads)?;
        }
        let mean = epoch_loss / xs.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Training("loss became non-finite".into()));
        }
        history.push(mean);
    }
    Ok(history)
}

/// Probability of the positive class for each input.
pub fn predict_proba<M: Classifier>(model: &M, xs: &[M::Input]) -> Result<Vec<f64>> {
    xs.iter()
        .map(|x| {
            let mut tape = Tape::new(model.params());
            let p = model.forward(&mut tape, x)?;
            Ok(tape.value(p).data()[1])
        })
        .collect()
}
