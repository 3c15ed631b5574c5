use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::LrTrainConfig;
use crate::clustering::{AeConfig, TsneConfig};
use crate::cohort::CohortConfig;
use crate::eval::{CvConfig, ModelKind};
use crate::model::HyperConfig;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
/// Length of the prediction window; fixed.
pub const T2_DAYS: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedMethod {
    MemoryNetwork,
    Pca,
    Autoencoder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedConfig {
    pub method: EmbedMethod,
    /// Output width of the PCA and autoencoder embeddings.
    pub dim: usize,
    /// Autoencoder settings; `bottleneck` is replaced by `dim`.
    pub autoencoder: AeConfig,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            method: EmbedMethod::MemoryNetwork,
            dim: 16,
            autoencoder: AeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    /// Inclusive range of candidate cluster counts.
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub tsne: TsneConfig,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: 6,
            restarts: 10,
            tsne: TsneConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateConfig {
    pub models: Vec<ModelKind>,
    pub cv: CvConfig,
    pub logistic: LrTrainConfig,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            models: ModelKind::ALL.to_vec(),
            cv: CvConfig::default(),
            logistic: LrTrainConfig::default(),
        }
    }
}

/// Everything a run needs. The run-level `seed` replaces the seed fields of
/// the nested sections when the configuration is resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub t1_hours: f64,
    pub t2_days: f64,
    pub output_dir: PathBuf,
    /// Read the cohort from this file instead of generating one.
    pub cohort_path: Option<PathBuf>,
    pub cohort: CohortConfig,
    pub model: HyperConfig,
    pub embed: EmbedConfig,
    pub cluster: ClusterConfig,
    pub evaluate: EvaluateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            t1_hours: 24.0,
            t2_days: T2_DAYS,
            output_dir: PathBuf::from("out"),
            cohort_path: None,
            cohort: CohortConfig::default(),
            model: HyperConfig::desk(),
            embed: EmbedConfig::default(),
            cluster: ClusterConfig::default(),
            evaluate: EvaluateConfig::default(),
        }
    }
}

impl RunConfig {
    /// A few hundred stays with short training; finishes in about a minute.
    pub fn small() -> Self {
        let mut c = Self::default();
        c.cohort.n_stays = 300;
        c.cohort.case_fraction = 0.3;
        c.model.epochs = 3;
        c.cluster.tsne.perplexity = 10.0;
        c.cluster.tsne.iters = 500;
        c.evaluate.logistic.epochs = 200;
        c
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            schema_version: Option<u32>,
        }
        let v: Version = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        match v.schema_version {
            Some(SCHEMA_VERSION) => {}
            Some(other) => {
                return Err(Error::Config(format!(
                    "unsupported schema_version {other}, expected {SCHEMA_VERSION}"
                )))
            }
            None => return Err(Error::Config("missing schema_version".into())),
        }
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Copies the run seed into every nested section and checks the result.
    pub fn resolve(mut self) -> Result<Self> {
        self.cohort.seed = self.seed;
        self.model.seed = self.seed;
        self.embed.autoencoder.seed = self.seed;
        self.embed.autoencoder.bottleneck = self.embed.dim;
        self.cluster.tsne.seed = self.seed;
        self.evaluate.cv.seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        if self.t1_hours != 24.0 && self.t1_hours != 48.0 {
            return Err(Error::Config(format!(
                "t1_hours must be 24 or 48, got {}",
                self.t1_hours
            )));
        }
        if self.t2_days != T2_DAYS {
            return Err(Error::Config(format!(
                "t2_days is fixed at {T2_DAYS}, got {}",
                self.t2_days
            )));
        }
        if let Some(p) = &self.cohort_path {
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "cohort_path {} does not exist",
                    p.display()
                )));
            }
        }
        self.cohort.validate()?;
        self.model.validate()?;
        self.evaluate.cv.validate()?;
        if self.evaluate.models.is_empty() {
            return Err(Error::Config("evaluate.models is empty".into()));
        }
        if self.cluster.k_min < 2 || self.cluster.k_max < self.cluster.k_min {
            return Err(Error::Config(format!(
                "invalid k range {}..={}",
                self.cluster.k_min, self.cluster.k_max
            )));
        }
        if self.cluster.restarts == 0 || self.embed.dim == 0 {
            return Err(Error::Config("restarts and embed.dim must be positive".into()));
        }
        Ok(())
    }
}
