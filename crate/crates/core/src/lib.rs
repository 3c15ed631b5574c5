//! AKI sub-phenotyping pipeline: synthetic ICU cohorts, KDIGO labelling,
//! feature extraction, a memory-network stay encoder, baselines, clustering
//! and statistical interpretation.

pub mod baselines;
pub mod clustering;
pub mod cohort;
pub mod error;
pub mod eval;
pub mod features;
pub mod kdigo;
pub mod model;
pub mod numeric;
pub mod pipeline;
pub mod stats;
pub mod util;

pub use error::{Error, Result};
