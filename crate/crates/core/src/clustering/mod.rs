//! Two-dimensional embeddings of stay representations and K-means with
//! internal-validity model selection.

mod autoencoder;
mod kmeans;
mod pca;
mod tsne;
mod validity;

pub use autoencoder::{autoencoder_embed, Activation, AeConfig, Autoencoder};
pub use kmeans::{kmeans, ClusterAssignment, MAX_LLOYD_ITERS};
pub use pca::{pca_project, Pca};
pub use tsne::{tsne_embed, TsneConfig, TsneResult};
pub use validity::{adjusted_rand_index, mcclain_rao, select_k, silhouette, KSelection};

use crate::{Error, Result};

/// Checks that `x` is a non-empty rectangular matrix of finite values and
/// returns its column count.
pub(crate) fn check_matrix(x: &[Vec<f64>], what: &str) -> Result<usize> {
    let Some(d) = x.first().map(Vec::len) else {
        return Err(Error::Argument(format!("{what}: no rows")));
    };
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(Error::Dimension(format!(
                "{what}: row {i} has {} columns, expected {d}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "{what}: row {i} has non-finite values"
            )));
        }
    }
    Ok(d)
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
