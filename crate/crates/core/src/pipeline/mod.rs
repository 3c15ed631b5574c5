//! Run configuration, stage bodies and the on-disk stage runner.

mod compute;
mod config;
mod stages;

pub use compute::{
    cluster_embeddings, embed_inputs, fit_full_scaling, flat_features, restore_memory_network,
    scaled_inputs, train_memory_network, ClusterOutcome, FULL_SPLIT,
};
pub use config::{
    ClusterConfig, EmbedConfig, EmbedMethod, EvaluateConfig, RunConfig, SCHEMA_VERSION, T2_DAYS,
};
pub use stages::{
    hash_file, read_exclusions, Manifest, Runner, Stage, StageStatus, CHECKPOINT, CLUSTERS,
    COHORT, EMBEDDINGS, EXCLUSIONS, FEATURES, HEATMAP, K_SELECTION, LABELS, METRICS_FOLDS,
    METRICS_TABLE, REPORT_CSV, REPORT_TXT, SCALING, STAGE_COMPOSITION, TRAIN_HISTORY, TSNE,
};
