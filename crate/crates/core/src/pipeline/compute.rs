//! In-memory stage bodies; the stage runner adds file plumbing around them.

use crate::clustering::{autoencoder_embed, pca_project, select_k, tsne_embed, KSelection, TsneResult};
use crate::eval::EvalStay;
use crate::features::{ScalingStats, StayTensor, D};
use crate::model::{train_classifier, HyperConfig, MemoryNetwork, StayInput};
use crate::numeric::ParamStore;
use crate::{Error, Result};

use super::config::{ClusterConfig, EmbedConfig, EmbedMethod};

/// Split id of the statistics fitted on every retained stay for
/// representation learning.
pub const FULL_SPLIT: &str = "all";

pub fn fit_full_scaling(data: &[EvalStay]) -> Result<ScalingStats> {
    let tensors: Vec<StayTensor> = data.iter().map(|s| s.tensor.clone()).collect();
    ScalingStats::fit(&tensors, FULL_SPLIT)
}

pub fn scaled_inputs(data: &[EvalStay], stats: &ScalingStats) -> Result<Vec<StayInput>> {
    data.iter()
        .map(|s| {
            Ok(StayInput {
                tensor: stats.apply(&s.tensor)?,
                statics: s.statics,
                notes: s.notes.clone(),
            })
        })
        .collect()
}

/// Trains the memory network on every retained stay for AKI prediction.
pub fn train_memory_network(
    data: &[EvalStay],
    stats: &ScalingStats,
    hyper: &HyperConfig,
    vocab_size: usize,
) -> Result<(MemoryNetwork, Vec<f64>)> {
    let first = data
        .first()
        .ok_or_else(|| Error::Training("no retained stays to train on".into()))?;
    let config = HyperConfig {
        memory_size: first.tensor.t,
        ..hyper.clone()
    };
    let inputs = scaled_inputs(data, stats)?;
    let ys: Vec<f64> = data.iter().map(|s| s.label as u8 as f64).collect();
    let mut net = MemoryNetwork::new(config.clone(), vocab_size, D)?;
    let history = train_classifier(&mut net, &inputs, &ys, &config.train_options())?;
    Ok((net, history))
}

/// Rebuilds a network around stored parameters, checking names and shapes.
pub fn restore_memory_network(
    config: HyperConfig,
    vocab_size: usize,
    store: ParamStore,
) -> Result<MemoryNetwork> {
    let fresh = MemoryNetwork::new(config, vocab_size, D)?;
    let same = fresh.store.len() == store.len()
        && fresh
            .store
            .iter()
            .zip(store.iter())
            .all(|((_, a, x), (_, b, y))| a == b && x.shape() == y.shape());
    if !same {
        return Err(Error::Schema(
            "checkpoint parameters do not match the configured network".into(),
        ));
    }
    Ok(MemoryNetwork { store, ..fresh })
}

/// Flattened scaled tensor followed by the static vector.
pub fn flat_features(inputs: &[StayInput]) -> Vec<Vec<f64>> {
    inputs
        .iter()
        .map(|x| {
            let mut row = x.tensor.values.clone();
            row.extend_from_slice(&x.statics);
            row
        })
        .collect()
}

/// Stay representations of `inputs` with the configured method.
pub fn embed_inputs(
    inputs: &[StayInput],
    cfg: &EmbedConfig,
    net: Option<&MemoryNetwork>,
) -> Result<Vec<Vec<f64>>> {
    match cfg.method {
        EmbedMethod::MemoryNetwork => {
            let net = net.ok_or_else(|| {
                Error::Argument("memory-network embedding needs a trained network".into())
            })?;
            net.embed_stays(inputs)
        }
        EmbedMethod::Pca => Ok(pca_project(&flat_features(inputs), cfg.dim)?.projection),
        EmbedMethod::Autoencoder => {
            let ae = crate::clustering::AeConfig {
                bottleneck: cfg.dim,
                ..cfg.autoencoder.clone()
            };
            Ok(autoencoder_embed(&flat_features(inputs), &ae)?.1)
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusterOutcome {
    pub tsne: TsneResult,
    pub selection: KSelection,
}

/// t-SNE to two dimensions, then k-means with k chosen by the McClain-Rao
/// index over the configured range.
pub fn cluster_embeddings(emb: &[Vec<f64>], cfg: &ClusterConfig, seed: u64) -> Result<ClusterOutcome> {
    let tsne = tsne_embed(emb, &cfg.tsne)?;
    let k_max = cfg.k_max.min(emb.len().saturating_sub(1));
    if k_max < cfg.k_min {
        return Err(Error::InsufficientData(format!(
            "{} cases cannot be split into {} clusters",
            emb.len(),
            cfg.k_min
        )));
    }
    let ks: Vec<usize> = (cfg.k_min..=k_max).collect();
    let selection = select_k(&tsne.embedding, &ks, seed, cfg.restarts)?;
    Ok(ClusterOutcome { tsne, selection })
}
